"""Least-squares estimation of log-periodic parameters.

For fixed nonlinear parameters ``(t_c, alpha[, phi])`` the model is linear in
``(A, B, C)``, so the fit scans an exhaustive grid over the nonlinear ones,
solving the linear subproblem in closed form at every node, and then polishes
the best node with a derivative-free pattern search. For the cosine shape the
phase enters linearly through ``C cos(theta + phi) = c1 cos(theta) + c2
sin(theta)`` and is solved rather than scanned.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DataError, FitError, SingularFitError, UsageError
from .model import (
    DEFAULT_LAMBDA,
    DEFAULT_RISE_FRACTION,
    LpplParams,
    Orientation,
    Shape,
    eval_lppl,
    eval_shape,
)
from .timeseries import PriceSeries, TransformState

__all__ = [
    "Grid",
    "FitConfig",
    "FitResult",
    "LinearFit",
    "COND_LIMIT",
    "linear_subfit",
    "grid_fit",
    "cost_profile",
    "synth",
    "synth_at",
    "fit_threads",
]

TWO_PI = 2.0 * math.pi
COND_LIMIT = 1e12
DAYS_PER_YEAR = 365.25

_SHAPE_CODES = {
    Shape.COSINE: _kernels.SHAPE_COSINE,
    Shape.COSMOD: _kernels.SHAPE_COSMOD,
    Shape.SAW: _kernels.SHAPE_SAW,
}


@dataclass(frozen=True)
class Grid:
    """Evenly spaced values ``min, min + step, ...`` up to ``max``.

    With ``periodic=True`` the range is half open, ``[min, max)``, so a phase
    grid over ``[0, 2*pi)`` does not visit the same angle twice.
    """

    min: float
    max: float
    step: float
    periodic: bool = False

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.min, self.max, self.step)):
            raise UsageError("grid bounds and step must be finite")
        if self.max < self.min:
            raise UsageError(f"grid max {self.max} is below min {self.min}")
        if not self.step > 0:
            raise UsageError(f"grid step must be positive, got {self.step}")
        if len(self.values()) == 0:
            raise UsageError("grid has no nodes")

    def values(self) -> np.ndarray:
        span = (self.max - self.min) / self.step
        if self.periodic:
            n = max(int(math.ceil(span - 1e-9)), 1)
        else:
            n = int(math.floor(span + 1e-9)) + 1
        return self.min + self.step * np.arange(n)

    def to_list(self):
        return [self.min, self.max, self.step]


def _phi_grid_default():
    return Grid(0.0, TWO_PI, TWO_PI / 24, periodic=True)


@dataclass(frozen=True)
class FitConfig:
    """Search space and options for :func:`grid_fit`.

    Defaults: alpha over ``[0.1, 1.0]`` in steps of 0.05, phase over
    ``[0, 2*pi)`` in 24 steps (only scanned for non-cosine shapes), and
    refinement until the pattern-search step has shrunk to
    ``refine_tolerance`` times the grid spacing.
    """

    t_c_grid: Grid
    orientation: Orientation = Orientation.BUBBLE
    shape: Shape = Shape.COSINE
    rise_fraction: float = DEFAULT_RISE_FRACTION
    lam: float = DEFAULT_LAMBDA
    alpha_grid: Grid = field(default_factory=lambda: Grid(0.1, 1.0, 0.05))
    phi_grid: Grid = field(default_factory=_phi_grid_default)
    refine: bool = True
    refine_tolerance: float = 1e-6
    threads: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        if not 0.0 < self.rise_fraction < 1.0:
            raise UsageError("rise_fraction must lie strictly inside (0, 1)")
        if not self.lam > 1.0:
            raise UsageError("lambda must be > 1")
        if not self.refine_tolerance > 0:
            raise UsageError("refine_tolerance must be positive")

    @classmethod
    def for_series(cls, series: PriceSeries, orientation=Orientation.BUBBLE,
                   horizon_years: float = 4.0, step_days: float = 5.0, **kwargs) -> "FitConfig":
        """Config whose critical-time grid starts one step beyond the data.

        Bubble grids cover ``(t_last, t_last + horizon_years]``; anti-bubble
        grids mirror this before the first sample.
        """
        step = step_days / DAYS_PER_YEAR
        orientation = Orientation(orientation)
        if orientation is Orientation.BUBBLE:
            t0 = float(series.t[-1])
            grid = Grid(t0 + step, t0 + horizon_years, step)
        else:
            t0 = float(series.t[0])
            grid = Grid(t0 - horizon_years, t0 - step, step)
        return cls(t_c_grid=grid, orientation=orientation, **kwargs)

    def validate_against(self, t: np.ndarray) -> None:
        tcs = self.t_c_grid.values()
        if self.orientation is Orientation.BUBBLE and not tcs[0] > t[-1]:
            raise UsageError(
                f"bubble fit needs every t_c grid node after the last sample ({t[-1]:.6f}); "
                f"grid starts at {tcs[0]:.6f}")
        if self.orientation is Orientation.ANTIBUBBLE and not tcs[-1] < t[0]:
            raise UsageError(
                f"anti-bubble fit needs every t_c grid node before the first sample ({t[0]:.6f}); "
                f"grid ends at {tcs[-1]:.6f}")
        k = 4 if self.shape is Shape.COSINE else 3
        if len(t) < k + 1:
            raise DataError(f"too few samples for a fit: {len(t)} (need at least {k + 1})")

    def to_dict(self) -> dict:
        return {
            "t_c_grid": self.t_c_grid.to_list(),
            "alpha_grid": self.alpha_grid.to_list(),
            "phi_grid": self.phi_grid.to_list(),
            "shape": self.shape.value,
            "rise_fraction": self.rise_fraction,
            "lambda": self.lam,
            "orientation": self.orientation.value,
            "refine": self.refine,
            "refine_tolerance": self.refine_tolerance,
        }


@dataclass(frozen=True)
class FitResult:
    params: LpplParams
    rss: float
    rmse: float
    n_samples: int
    grid_evaluations: int
    cost_profile: list
    target_transform: TransformState
    grid_best_rss: float = math.nan
    refine_evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "rss": self.rss,
            "rmse": self.rmse,
            "n_samples": self.n_samples,
            "grid_evaluations": self.grid_evaluations,
            "target_transform": TransformState(self.target_transform).value,
            "cost_profile": [[tc, rss if math.isfinite(rss) else None] for tc, rss in self.cost_profile],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        try:
            profile = [(float(tc), math.inf if r is None else float(r)) for tc, r in d["cost_profile"]]
            return cls(
                params=LpplParams.from_dict(d["params"]),
                rss=float(d["rss"]),
                rmse=float(d["rmse"]),
                n_samples=int(d["n_samples"]),
                grid_evaluations=int(d["grid_evaluations"]),
                cost_profile=profile,
                target_transform=TransformState(d["target_transform"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"invalid fit result record: {exc}") from None


class LinearFit(NamedTuple):
    A: float
    B: float
    C: float
    phi: float
    rss: float
    cond: float


def fit_threads(requested: int | None = None) -> int:
    """Worker count for grid evaluation, capped by ``LOGPERIOD_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("LOGPERIOD_THREADS")
    if cap:
        try:
            n = min(n, max(int(cap), 1))
        except ValueError:
            raise UsageError(f"LOGPERIOD_THREADS must be an integer, got {cap!r}") from None
    return max(n, 1)


def _design(t, t_c, alpha, shape, phi, lam, rise_fraction):
    x = np.abs(t - t_c)
    xa = np.power(x, alpha)
    u = np.log(x) / math.log(lam)
    if shape is Shape.COSINE:
        theta = TWO_PI * u
        return np.column_stack([np.ones_like(x), xa, xa * np.cos(theta), xa * np.sin(theta)])
    s = eval_shape(u, shape, phi, rise_fraction)
    return np.column_stack([np.ones_like(x), xa, xa * s])


def linear_subfit(series: PriceSeries, t_c: float, alpha: float, shape=Shape.COSINE, phi: float = 0.0,
                  orientation=Orientation.BUBBLE, lam: float = DEFAULT_LAMBDA,
                  rise_fraction: float = DEFAULT_RISE_FRACTION) -> LinearFit:
    """Least-squares ``(A, B, C)`` for fixed ``(t_c, alpha, phi)``.

    Solves the normal equations with full pivoting. For the cosine shape the
    phase is part of the linear solve and the ``phi`` argument is ignored; the
    returned ``C`` is then non-negative.

    Raises
    ------
    SingularFitError
        If the equilibrated normal matrix has condition estimate above
        ``COND_LIMIT``.
    """
    return _linear_arrays(series.t, series.v, t_c, alpha, Shape(shape), phi, Orientation(orientation),
                          lam, rise_fraction)


def _linear_arrays(t, y, t_c, alpha, shape, phi, orientation, lam, rise_fraction):
    k = 4 if shape is Shape.COSINE else 3
    if len(t) < k + 1:
        raise DataError(f"too few samples for the linear subfit: {len(t)} (need at least {k + 1})")
    if orientation is Orientation.BUBBLE and not np.all(t < t_c):
        raise DataError("bubble subfit needs every sample before t_c")
    if orientation is Orientation.ANTIBUBBLE and not np.all(t > t_c):
        raise DataError("anti-bubble subfit needs every sample after t_c")
    X = _design(t, t_c, alpha, shape, phi, lam, rise_fraction)
    coef, cond = _kernels.solve_full_pivot(X.T @ X, X.T @ y, COND_LIMIT)
    if coef is None:
        raise SingularFitError(
            f"normal equations singular at t_c={t_c}, alpha={alpha} (condition estimate {cond:.3g})")
    resid = y - X @ coef
    rss = float(resid @ resid)
    if shape is Shape.COSINE:
        c1, c2 = coef[2], coef[3]
        C = math.hypot(c1, c2)
        phi = math.atan2(-c2, c1) if C > 0 else 0.0
    else:
        C = float(coef[2])
    return LinearFit(float(coef[0]), float(coef[1]), float(C), float(phi) % TWO_PI, rss, float(cond))


class _Objective:
    """Kernel-backed rss at a single nonlinear node, with domain checks."""

    def __init__(self, t, y, config: FitConfig):
        self.t = np.ascontiguousarray(t, dtype=float)
        self.y = np.ascontiguousarray(y, dtype=float)
        self.config = config
        self.code = _SHAPE_CODES[config.shape]
        self.log_lam = math.log(config.lam)
        self.evaluations = 0

    def grid(self, tcs, alphas, phis, threads=1):
        c = self.config
        args = (alphas, phis, self.code, c.rise_fraction, self.log_lam, COND_LIMIT)
        if threads <= 1 or len(tcs) < 2 * threads:
            return _kernels.grid_rss(self.t, self.y, tcs, *args)
        chunks = np.array_split(np.asarray(tcs), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ch: _kernels.grid_rss(self.t, self.y, ch, *args), chunks))
        return np.concatenate(parts, axis=0)

    def __call__(self, t_c, alpha, phi):
        self.evaluations += 1
        c = self.config
        if c.orientation is Orientation.BUBBLE and not t_c > self.t[-1]:
            return math.inf
        if c.orientation is Orientation.ANTIBUBBLE and not t_c < self.t[0]:
            return math.inf
        r = _kernels.grid_rss(self.t, self.y, np.array([t_c]), np.array([alpha]), np.array([phi]),
                              self.code, c.rise_fraction, self.log_lam, COND_LIMIT)
        return float(r[0, 0, 0])


def _improves(new, old):
    # ignore changes at rounding level so that affinely rescaled data take the same path
    return new < old - 1e-12 * abs(old)


def _pattern_search(f, x0, f0, steps, lower, upper, periodic, tol, max_evals=20000):
    """Hooke-Jeeves search with step halving, bounded and optionally periodic per axis.

    Stops when the step scale falls below ``tol`` (relative to ``steps``), when
    the objective reaches zero, or after ``max_evals`` evaluations.
    """
    x = np.array(x0, dtype=float)
    fx = f0
    steps = np.asarray(steps, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    evals = 0

    def clamp(p):
        p = p.copy()
        for i in range(len(p)):
            if periodic[i]:
                p[i] = p[i] % TWO_PI
            else:
                p[i] = min(max(p[i], lower[i]), upper[i])
        return p

    def evaluate(p):
        nonlocal evals
        evals += 1
        return f(*p)

    def explore(base, fbase, h):
        p = base.copy()
        fp = fbase
        for i in range(len(p)):
            if h[i] == 0.0:
                continue
            for sign in (1.0, -1.0):
                q = p.copy()
                q[i] += sign * h[i]
                q = clamp(q)
                if q[i] == p[i]:
                    continue
                fq = evaluate(q)
                if _improves(fq, fp):
                    p, fp = q, fq
                    break
        return p, fp

    scale = 1.0
    while scale >= tol and fx > 0.0 and evals < max_evals:
        h = steps * scale
        xn, fn = explore(x, fx, h)
        if not _improves(fn, fx):
            scale *= 0.5
            continue
        while evals < max_evals:
            # pattern move along the last successful direction
            xp = clamp(xn + (xn - x))
            x, fx = xn, fn
            fp = evaluate(xp)
            xq, fq = explore(xp, fp, h)
            if _improves(fq, fx):
                xn, fn = xq, fq
            else:
                break
    return x, fx, evals


def _lexicographic_argmin(cube):
    # np.argmin returns the first occurrence; the cube is laid out (t_c, alpha, phi) ascending
    flat = int(np.argmin(cube))
    return np.unravel_index(flat, cube.shape)


def _fit_arrays(t, y, config: FitConfig, target_transform, profile_only=False):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    config.validate_against(t)
    if np.ptp(y) == 0.0:
        raise FitError("series is constant; there is no structure to fit")

    tcs = config.t_c_grid.values()
    alphas = config.alpha_grid.values()
    phis = config.phi_grid.values() if config.shape is not Shape.COSINE else np.zeros(1)
    objective = _Objective(t, y, config)
    cube = objective.grid(tcs, alphas, phis, threads=fit_threads(config.threads))
    profile = [(float(tc), float(v)) for tc, v in zip(tcs, cube.min(axis=(1, 2)))]
    if profile_only:
        return profile
    if not np.isfinite(cube).any():
        raise SingularFitError("every grid node is singular")

    it, ia, ip = _lexicographic_argmin(cube)
    best = float(cube[it, ia, ip])
    node = np.array([tcs[it], alphas[ia], phis[ip]])
    rss = best
    refine_evals = 0
    if config.refine:
        cos_shape = config.shape is Shape.COSINE
        steps = [
            config.t_c_grid.step if len(tcs) > 1 else 0.0,
            config.alpha_grid.step if len(alphas) > 1 else 0.0,
            0.0 if cos_shape else config.phi_grid.step,
        ]
        lower = [tcs[0], alphas[0], 0.0]
        upper = [tcs[-1], alphas[-1], TWO_PI]
        node, rss, refine_evals = _pattern_search(
            objective, node, best, steps, lower, upper, (False, False, True), config.refine_tolerance)

    t_c, alpha, phi = (float(v) for v in node)
    lin = _linear_arrays(t, y, t_c, alpha, config.shape, phi, config.orientation, config.lam,
                         config.rise_fraction)
    params = LpplParams(t_c=t_c, alpha=alpha, A=lin.A, B=lin.B, C=lin.C, phi=lin.phi, lam=config.lam,
                        shape=config.shape, rise_fraction=config.rise_fraction,
                        orientation=config.orientation)
    return FitResult(
        params=params,
        rss=rss,
        rmse=math.sqrt(rss / len(t)),
        n_samples=len(t),
        grid_evaluations=int(cube.size),
        cost_profile=profile,
        target_transform=TransformState(target_transform),
        grid_best_rss=best,
        refine_evaluations=refine_evals,
    )


def grid_fit(series: PriceSeries, config: FitConfig) -> FitResult:
    """Fit one log-periodic component by grid search plus pattern-search refinement.

    The grid minimum is taken with ties broken toward smaller ``t_c``, then
    smaller ``alpha``, then smaller ``phi``. Results do not depend on the
    number of worker threads.
    """
    return _fit_arrays(series.t, series.v, config, series.transform_state)


def cost_profile(series: PriceSeries, config: FitConfig) -> list[tuple[float, float]]:
    """Best grid rss at each ``t_c`` node, minimized over alpha (and phi)."""
    return _fit_arrays(series.t, series.v, config, series.transform_state, profile_only=True)


def synth_at(params: LpplParams, t, noise_sigma: float = 0.0, seed: int = 0,
             transform_state=TransformState.LOG, label: str = "synthetic") -> PriceSeries:
    """Model values at the given times plus seeded Gaussian noise."""
    if noise_sigma < 0:
        raise UsageError("noise_sigma must be non-negative")
    t = np.asarray(t, dtype=float)
    v = eval_lppl(t, params)
    if noise_sigma > 0:
        v = v + np.random.default_rng(seed).normal(0.0, noise_sigma, size=len(t))
    return PriceSeries(t, v, label, transform_state)


def synth(params: LpplParams, t_from: float, t_to: float, n: int, noise_sigma: float = 0.0,
          seed: int = 0, transform_state=TransformState.LOG) -> PriceSeries:
    """``n`` equally spaced model samples over ``[t_from, t_to]`` with seeded noise."""
    if n < 4:
        raise UsageError(f"synth needs n >= 4, got {n}")
    if not t_from < t_to:
        raise UsageError("synth window is empty or inverted")
    return synth_at(params, np.linspace(t_from, t_to, n), noise_sigma, seed, transform_state)
