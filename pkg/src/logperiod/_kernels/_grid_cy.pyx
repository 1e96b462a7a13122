# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid residual kernel.

Same contract as ``_grid_py.grid_rss``. The loop body runs without the GIL so
callers may split the critical-time axis across threads.
"""
import numpy as np

from libc.math cimport cos, sin, exp, log, fabs, floor, sqrt, INFINITY, M_PI

cdef enum:
    KMAX = 4

cdef int SHAPE_COSINE = 0
cdef int SHAPE_COSMOD = 1
cdef int SHAPE_SAW = 2


cdef int _solve(double* M, double* b, double* x, int k, double cond_limit) noexcept nogil:
    """Equilibrated full-pivot elimination on a k x k (row stride KMAX) system.

    Returns 0 on success, 1 when singular or the pivot ratio exceeds cond_limit.
    """
    cdef double A[KMAX * KMAX]
    cdef double r[KMAX]
    cdef double d[KMAX]
    cdef double z[KMAX]
    cdef int perm[KMAX]
    cdef int i, j, p, ip, jp, ti
    cdef double piv, best, v, f, acc, pmax = 0.0, pmin = INFINITY

    for i in range(k):
        if not (M[i * KMAX + i] > 0.0):
            return 1
        d[i] = 1.0 / sqrt(M[i * KMAX + i])
    for i in range(k):
        r[i] = b[i] * d[i]
        perm[i] = i
        for j in range(k):
            A[i * KMAX + j] = M[i * KMAX + j] * d[i] * d[j]

    for p in range(k):
        best = -1.0
        ip = p
        jp = p
        for i in range(p, k):
            for j in range(p, k):
                v = fabs(A[i * KMAX + j])
                if v > best:
                    best = v
                    ip = i
                    jp = j
        piv = best
        if piv > pmax:
            pmax = piv
        if piv < pmin:
            pmin = piv
        if piv == 0.0 or pmax > cond_limit * pmin:
            return 1
        if ip != p:
            for j in range(k):
                v = A[p * KMAX + j]
                A[p * KMAX + j] = A[ip * KMAX + j]
                A[ip * KMAX + j] = v
            v = r[p]
            r[p] = r[ip]
            r[ip] = v
        if jp != p:
            for i in range(k):
                v = A[i * KMAX + p]
                A[i * KMAX + p] = A[i * KMAX + jp]
                A[i * KMAX + jp] = v
            ti = perm[p]
            perm[p] = perm[jp]
            perm[jp] = ti
        for i in range(p + 1, k):
            f = A[i * KMAX + p] / A[p * KMAX + p]
            for j in range(p, k):
                A[i * KMAX + j] -= f * A[p * KMAX + j]
            r[i] -= f * r[p]

    for p in range(k - 1, -1, -1):
        acc = r[p]
        for j in range(p + 1, k):
            acc -= A[p * KMAX + j] * z[j]
        z[p] = acc / A[p * KMAX + p]
    for j in range(k):
        x[perm[j]] = z[j] * d[perm[j]]
    return 0


cdef void _rows(const double[::1] t, const double[::1] y, const double[::1] tcs,
                const double[::1] alphas, const double[::1] phis,
                int shape, double rise, double log_lam, double cond_limit,
                double[:, :, ::1] out, double[::1] lx, double[::1] u,
                double[::1] cc, double[::1] ss, double[:, ::1] xa,
                double[::1] sh, Py_ssize_t it0, Py_ssize_t it1) noexcept nogil:
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t na = alphas.shape[0]
    cdef Py_ssize_t nphi = phis.shape[0]
    cdef Py_ssize_t it, ia, ip, i
    cdef double M[KMAX * KMAX]
    cdef double b[KMAX]
    cdef double coef[KMAX]
    cdef double tc, theta, f, g, h, yi, res, rss, w, cph, sph
    cdef double sf, sg, sh_, sff, sfg, sfh, sgg, sgh, shh, sy, syf, syg, syh
    cdef double two_pi = 2.0 * M_PI

    sy = 0.0
    for i in range(n):
        sy += y[i]

    for it in range(it0, it1):
        tc = tcs[it]
        for i in range(n):
            lx[i] = log(fabs(t[i] - tc))
            u[i] = lx[i] / log_lam
            theta = two_pi * u[i]
            cc[i] = cos(theta)
            ss[i] = sin(theta)
        for ia in range(na):
            for i in range(n):
                xa[ia, i] = exp(alphas[ia] * lx[i])

        if shape == SHAPE_COSINE:
            for ia in range(na):
                sf = sg = sh_ = sff = sfg = sfh = sgg = sgh = shh = syf = syg = syh = 0.0
                for i in range(n):
                    f = xa[ia, i]
                    g = f * cc[i]
                    h = f * ss[i]
                    yi = y[i]
                    sf += f
                    sg += g
                    sh_ += h
                    sff += f * f
                    sfg += f * g
                    sfh += f * h
                    sgg += g * g
                    sgh += g * h
                    shh += h * h
                    syf += yi * f
                    syg += yi * g
                    syh += yi * h
                M[0] = <double>n; M[1] = sf; M[2] = sg; M[3] = sh_
                M[4] = sf; M[5] = sff; M[6] = sfg; M[7] = sfh
                M[8] = sg; M[9] = sfg; M[10] = sgg; M[11] = sgh
                M[12] = sh_; M[13] = sfh; M[14] = sgh; M[15] = shh
                b[0] = sy; b[1] = syf; b[2] = syg; b[3] = syh
                if _solve(M, b, coef, 4, cond_limit):
                    out[it, ia, 0] = INFINITY
                    continue
                rss = 0.0
                for i in range(n):
                    f = xa[ia, i]
                    res = y[i] - (coef[0] + coef[1] * f + coef[2] * f * cc[i] + coef[3] * f * ss[i])
                    rss += res * res
                out[it, ia, 0] = rss
        else:
            for ip in range(nphi):
                if shape == SHAPE_COSMOD:
                    cph = cos(phis[ip])
                    sph = sin(phis[ip])
                    for i in range(n):
                        sh[i] = fabs(cph * cc[i] - sph * ss[i])
                else:
                    for i in range(n):
                        w = u[i] + phis[ip] / two_pi
                        w = w - floor(w)
                        if w < rise:
                            sh[i] = -1.0 + 2.0 * w / rise
                        else:
                            sh[i] = 1.0 - 2.0 * (w - rise) / (1.0 - rise)
                for ia in range(na):
                    sf = sg = sff = sfg = sgg = syf = syg = 0.0
                    for i in range(n):
                        f = xa[ia, i]
                        g = f * sh[i]
                        yi = y[i]
                        sf += f
                        sg += g
                        sff += f * f
                        sfg += f * g
                        sgg += g * g
                        syf += yi * f
                        syg += yi * g
                    M[0] = <double>n; M[1] = sf; M[2] = sg
                    M[4] = sf; M[5] = sff; M[6] = sfg
                    M[8] = sg; M[9] = sfg; M[10] = sgg
                    b[0] = sy; b[1] = syf; b[2] = syg
                    if _solve(M, b, coef, 3, cond_limit):
                        out[it, ia, ip] = INFINITY
                        continue
                    rss = 0.0
                    for i in range(n):
                        f = xa[ia, i]
                        res = y[i] - (coef[0] + coef[1] * f + coef[2] * f * sh[i])
                        rss += res * res
                    out[it, ia, ip] = rss


def grid_rss(t, y, tcs, alphas, phis, int shape, double rise, double log_lam, double cond_limit):
    """Residual sum of squares at every ``(t_c, alpha, phi)`` node.

    See ``_grid_py.grid_rss`` for the contract.
    """
    cdef const double[::1] t_v = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] tc_v = np.ascontiguousarray(tcs, dtype=np.float64)
    cdef const double[::1] a_v = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef const double[::1] p_v = np.ascontiguousarray(phis, dtype=np.float64)
    cdef Py_ssize_t n = t_v.shape[0]
    cdef Py_ssize_t nphi = 1 if shape == SHAPE_COSINE else p_v.shape[0]
    if y_v.shape[0] != n:
        raise ValueError("t and y must have equal length")
    out = np.empty((tc_v.shape[0], a_v.shape[0], nphi), dtype=np.float64)
    cdef double[:, :, ::1] out_v = out
    cdef double[::1] lx = np.empty(n)
    cdef double[::1] u = np.empty(n)
    cdef double[::1] cc = np.empty(n)
    cdef double[::1] ss = np.empty(n)
    cdef double[::1] sh = np.empty(n)
    cdef double[:, ::1] xa = np.empty((a_v.shape[0], n))
    with nogil:
        _rows(t_v, y_v, tc_v, a_v, p_v, shape, rise, log_lam, cond_limit,
              out_v, lx, u, cc, ss, xa, sh, 0, tc_v.shape[0])
    return out
