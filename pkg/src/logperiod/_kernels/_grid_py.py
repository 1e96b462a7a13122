"""Pure numpy implementation of the grid residual kernel.

Used when the compiled extension is missing or when ``LOGPERIOD_PURE_PYTHON``
is set. Vectorized over the alpha and phi axes for each critical time.
"""
import math

import numpy as np

SHAPE_COSINE, SHAPE_COSMOD, SHAPE_SAW = 0, 1, 2
TWO_PI = 2.0 * math.pi


def solve_full_pivot(M, b, cond_limit):
    """Solve the small SPD system ``M x = b`` by Gaussian elimination with full pivoting.

    The system is first equilibrated to unit diagonal. The ratio of the
    largest to the smallest pivot serves as condition estimate.

    Returns
    -------
    x : ndarray or None
        Solution, or ``None`` when the estimate exceeds ``cond_limit``.
    cond : float
        Pivot-ratio condition estimate of the equilibrated matrix.
    """
    M = np.array(M, dtype=float)
    b = np.array(b, dtype=float)
    k = len(b)
    diag = np.diag(M).copy()
    if np.any(~(diag > 0.0)):
        return None, math.inf
    d = 1.0 / np.sqrt(diag)
    A = M * d[:, None] * d[None, :]
    r = b * d
    perm = np.arange(k)
    pmax = 0.0
    pmin = math.inf
    for p in range(k):
        sub = np.abs(A[p:, p:])
        ip, jp = np.unravel_index(np.argmax(sub), sub.shape)
        ip += p
        jp += p
        piv = abs(A[ip, jp])
        pmax = max(pmax, piv)
        pmin = min(pmin, piv)
        if piv == 0.0 or pmax > cond_limit * pmin:
            return None, math.inf if piv == 0.0 else pmax / pmin
        if ip != p:
            A[[p, ip], :] = A[[ip, p], :]
            r[[p, ip]] = r[[ip, p]]
        if jp != p:
            A[:, [p, jp]] = A[:, [jp, p]]
            perm[[p, jp]] = perm[[jp, p]]
        for i in range(p + 1, k):
            f = A[i, p] / A[p, p]
            A[i, p:] -= f * A[p, p:]
            r[i] -= f * r[p]
    z = np.zeros(k)
    for p in range(k - 1, -1, -1):
        z[p] = (r[p] - A[p, p + 1:] @ z[p + 1:]) / A[p, p]
    x = np.empty(k)
    x[perm] = z
    return x * d, pmax / pmin


def _batched_solve(M, b, cond_limit):
    """Vectorized :func:`solve_full_pivot` over a leading batch axis.

    Singular members get NaN solutions.
    """
    nb, k, _ = M.shape
    diag = np.einsum("bii->bi", M)
    bad = ~np.all(diag > 0.0, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = 1.0 / np.sqrt(np.where(diag > 0.0, diag, 1.0))
    A = M * d[:, :, None] * d[:, None, :]
    r = b * d
    perm = np.tile(np.arange(k), (nb, 1))
    rows = np.arange(nb)
    pmax = np.zeros(nb)
    pmin = np.full(nb, np.inf)
    for p in range(k):
        sub = np.abs(A[:, p:, p:]).reshape(nb, -1)
        flat = np.argmax(sub, axis=1)
        ip = flat // (k - p) + p
        jp = flat % (k - p) + p
        piv = sub[rows, flat]
        pmax = np.maximum(pmax, piv)
        pmin = np.minimum(pmin, piv)
        bad |= (piv == 0.0) | (pmax > cond_limit * pmin)
        # row swap p <-> ip
        rp = A[rows, p, :].copy()
        A[rows, p, :] = A[rows, ip, :]
        A[rows, ip, :] = rp
        tmp = r[rows, p].copy()
        r[rows, p] = r[rows, ip]
        r[rows, ip] = tmp
        # column swap p <-> jp
        cp = A[rows, :, p].copy()
        A[rows, :, p] = A[rows, :, jp]
        A[rows, :, jp] = cp
        tp = perm[rows, p].copy()
        perm[rows, p] = perm[rows, jp]
        perm[rows, jp] = tp
        with np.errstate(divide="ignore", invalid="ignore"):
            for i in range(p + 1, k):
                f = A[:, i, p] / A[:, p, p]
                A[:, i, p:] -= f[:, None] * A[:, p, p:]
                r[:, i] -= f * r[:, p]
    z = np.zeros((nb, k))
    with np.errstate(divide="ignore", invalid="ignore"):
        for p in range(k - 1, -1, -1):
            acc = np.einsum("bj,bj->b", A[:, p, p + 1:], z[:, p + 1:])
            z[:, p] = (r[:, p] - acc) / A[:, p, p]
    x = np.empty_like(z)
    x[rows[:, None], perm] = z
    x *= d
    x[bad] = np.nan
    return x


def _shape_values(u, c, s, phis, shape, rise):
    """Shape samples for every phi, shape ``(n_phi, n)``."""
    if shape == SHAPE_COSMOD:
        return np.abs(np.cos(phis)[:, None] * c[None, :] - np.sin(phis)[:, None] * s[None, :])
    w = u[None, :] + phis[:, None] / TWO_PI
    w = w - np.floor(w)
    return np.where(w < rise, -1.0 + 2.0 * w / rise, 1.0 - 2.0 * (w - rise) / (1.0 - rise))


def grid_rss(t, y, tcs, alphas, phis, shape, rise, log_lam, cond_limit):
    """Residual sum of squares at every ``(t_c, alpha, phi)`` node.

    Returns an array of shape ``(len(tcs), len(alphas), n_phi)``, where
    ``n_phi`` is 1 for the cosine shape (phase solved linearly) and
    ``len(phis)`` otherwise. Singular nodes hold ``inf``.
    """
    t = np.ascontiguousarray(t, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    tcs = np.asarray(tcs, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    n = len(t)
    na = len(alphas)
    cosine = shape == SHAPE_COSINE
    nphi = 1 if cosine else len(phis)
    out = np.empty((len(tcs), na, nphi))
    ysum = y.sum()
    for it, tc in enumerate(tcs):
        lx = np.log(np.abs(t - tc))
        u = lx / log_lam
        theta = TWO_PI * u
        c = np.cos(theta)
        s = np.sin(theta)
        xa = np.exp(alphas[:, None] * lx[None, :])  # (na, n)
        if cosine:
            cols = np.stack([np.ones_like(xa), xa, xa * c, xa * s], axis=1)  # (na, 4, n)
        else:
            sh = _shape_values(u, c, s, phis, shape, rise)  # (nphi, n)
            g = xa[:, None, :] * sh[None, :, :]  # (na, nphi, n)
            ones = np.ones_like(g)
            xb = np.broadcast_to(xa[:, None, :], g.shape)
            cols = np.stack([ones, xb, g], axis=2).reshape(na * nphi, 3, n)
        M = np.einsum("bin,bjn->bij", cols, cols)
        rhs = np.einsum("bin,n->bi", cols, y)
        rhs[:, 0] = ysum
        coef = _batched_solve(M, rhs, cond_limit)
        fit = np.einsum("bi,bin->bn", np.nan_to_num(coef), cols)
        rss = np.sum((y[None, :] - fit) ** 2, axis=1)
        rss[np.isnan(coef[:, 0])] = np.inf
        out[it] = rss.reshape(na, nphi)
    return out
