"""Log-periodic power-law model: shapes, parameters and evaluation.

The model is written in the fitting form

    y(t) = A + B * x**alpha + C * x**alpha * P(ln(x) / ln(lam))

with ``x = |t - t_c|`` and ``P`` one of three unit-amplitude shapes of period
one. ``A`` is the price level, ``B`` the power-law trend amplitude and ``C``
the oscillation amplitude. The angular log-frequency follows from the scaling
factor as ``omega = 2*pi / ln(lam)``, so ``P(u) = cos(2*pi*u + phi)`` is the
same as ``cos(omega * ln(x) + phi)`` and same-type extrema of the oscillation
sit at distances ``x`` that contract by exactly ``lam``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DataError, UsageError

__all__ = [
    "Shape",
    "Orientation",
    "ScalingLaw",
    "LpplParams",
    "DEFAULT_LAMBDA",
    "DEFAULT_RISE_FRACTION",
    "omega_from_lambda",
    "alpha_from_gamma",
    "distance_x",
    "eval_shape",
    "eval_lppl",
    "power_term",
    "oscillatory_term",
    "extrema_times",
    "extrema_points",
]

TWO_PI = 2.0 * math.pi
DEFAULT_LAMBDA = 2.0
DEFAULT_RISE_FRACTION = 0.3
OMEGA_LOAD_TOLERANCE = 1e-9


class Shape(str, enum.Enum):
    """Oscillation shape of the log-periodic term."""

    COSINE = "cosine"
    COSMOD = "cosmod"
    SAW = "saw"


class Orientation(str, enum.Enum):
    """Bubble: samples precede ``t_c``. Anti-bubble: samples follow it."""

    BUBBLE = "bubble"
    ANTIBUBBLE = "antibubble"


def _check_lambda(lam):
    if not lam > 1.0 or not math.isfinite(lam):
        raise UsageError(f"scaling factor lambda must be a finite number > 1, got {lam}")


def omega_from_lambda(lam: float) -> float:
    """Angular log-frequency ``2*pi / ln(lam)``."""
    _check_lambda(lam)
    return TWO_PI / math.log(lam)


def alpha_from_gamma(gamma: float, lam: float) -> float:
    """Critical exponent ``ln(gamma) / ln(lam)``."""
    _check_lambda(lam)
    if not gamma > 0.0:
        raise UsageError(f"gamma must be > 0, got {gamma}")
    return math.log(gamma) / math.log(lam)


@dataclass(frozen=True)
class ScalingLaw:
    """Scaling factor ``lam``, rescaling constant ``gamma`` and exponent ``alpha``.

    ``Phi(lam * x) = gamma * Phi(x)`` for a pure power law ``x**alpha`` exactly
    when ``alpha = ln(gamma) / ln(lam)``; the constructor enforces that tie.
    """

    lam: float = DEFAULT_LAMBDA
    gamma: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        _check_lambda(self.lam)
        if not self.gamma > 0.0:
            raise UsageError(f"gamma must be > 0, got {self.gamma}")
        expected = alpha_from_gamma(self.gamma, self.lam)
        if abs(expected - self.alpha) > 1e-12 * max(1.0, abs(expected)):
            raise UsageError(
                f"alpha={self.alpha} inconsistent with ln(gamma)/ln(lambda)={expected}")

    @classmethod
    def from_alpha(cls, alpha: float, lam: float = DEFAULT_LAMBDA) -> "ScalingLaw":
        return cls(lam=lam, gamma=lam ** alpha, alpha=alpha)

    @classmethod
    def from_gamma(cls, gamma: float, lam: float = DEFAULT_LAMBDA) -> "ScalingLaw":
        return cls(lam=lam, gamma=gamma, alpha=alpha_from_gamma(gamma, lam))


@dataclass(frozen=True)
class LpplParams:
    """Parameters of one log-periodic component.

    ``omega`` is derived from ``lam`` and never stored independently. ``phi``
    is wrapped into ``[0, 2*pi)`` on construction. ``rise_fraction`` only
    matters for the saw shape.
    """

    t_c: float
    alpha: float
    A: float = 0.0
    B: float = 0.0
    C: float = 0.0
    phi: float = 0.0
    lam: float = DEFAULT_LAMBDA
    shape: Shape = Shape.COSINE
    rise_fraction: float = DEFAULT_RISE_FRACTION
    orientation: Orientation = Orientation.BUBBLE

    def __post_init__(self):
        _check_lambda(self.lam)
        object.__setattr__(self, "shape", Shape(self.shape))
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        if not 0.0 < self.rise_fraction < 1.0:
            raise UsageError(f"rise_fraction must lie strictly inside (0, 1), got {self.rise_fraction}")
        for name in ("t_c", "alpha", "A", "B", "C", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise UsageError(f"parameter {name} must be finite")
        phi = math.fmod(self.phi, TWO_PI)
        if phi < 0.0:
            phi += TWO_PI
        if phi >= TWO_PI:  # fmod of a tiny negative number can round up to 2*pi
            phi = 0.0
        object.__setattr__(self, "phi", phi)

    @property
    def omega(self) -> float:
        return omega_from_lambda(self.lam)

    @property
    def scaling(self) -> ScalingLaw:
        return ScalingLaw.from_alpha(self.alpha, self.lam)

    def replace(self, **changes) -> "LpplParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "t_c": self.t_c,
            "lambda": self.lam,
            "alpha": self.alpha,
            "omega": self.omega,
            "phi": self.phi,
            "A": self.A,
            "B": self.B,
            "C": self.C,
            "shape": self.shape.value,
            "rise_fraction": self.rise_fraction,
            "orientation": self.orientation.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LpplParams":
        try:
            params = cls(
                t_c=float(d["t_c"]),
                alpha=float(d["alpha"]),
                A=float(d["A"]),
                B=float(d["B"]),
                C=float(d["C"]),
                phi=float(d["phi"]),
                lam=float(d.get("lambda", DEFAULT_LAMBDA)),
                shape=Shape(d.get("shape", "cosine")),
                rise_fraction=float(d.get("rise_fraction", DEFAULT_RISE_FRACTION)),
                orientation=Orientation(d.get("orientation", "bubble")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"invalid parameter record: {exc}") from None
        if "omega" in d and abs(float(d["omega"]) - params.omega) > OMEGA_LOAD_TOLERANCE:
            raise DataError(
                f"stored omega {d['omega']} disagrees with 2*pi/ln(lambda) = {params.omega}")
        return params


def distance_x(t, t_c: float, orientation: Orientation):
    """Distance ``|t - t_c|`` to the critical time, validated per orientation.

    Works on scalars and arrays; raises if any time sits on the wrong side of
    ``t_c`` or exactly on it.
    """
    t_arr = np.asarray(t, dtype=float)
    orientation = Orientation(orientation)
    if orientation is Orientation.BUBBLE:
        bad = ~(t_arr < t_c)
        side = "before"
    else:
        bad = ~(t_arr > t_c)
        side = "after"
    if np.any(bad):
        raise DataError(
            f"{orientation.value} orientation needs every time strictly {side} t_c={t_c}")
    x = np.abs(t_arr - t_c)
    return float(x) if x.ndim == 0 else x


def eval_shape(u, shape: Shape, phi: float = 0.0, rise_fraction: float = DEFAULT_RISE_FRACTION):
    """Unit-amplitude periodic shape of period one in ``u``.

    * cosine: ``cos(2*pi*u + phi)``
    * cosmod: ``|cos(2*pi*u + phi)|``
    * saw: with ``w = frac(u + phi/(2*pi))``, rises linearly from -1 to +1 on
      ``[0, r)`` and falls back to -1 on ``[r, 1)``, ``r = rise_fraction``.
    """
    shape = Shape(shape)
    u = np.asarray(u, dtype=float)
    if shape is Shape.COSINE:
        out = np.cos(TWO_PI * u + phi)
    elif shape is Shape.COSMOD:
        out = np.abs(np.cos(TWO_PI * u + phi))
    else:
        r = rise_fraction
        if not 0.0 < r < 1.0:
            raise UsageError(f"rise_fraction must lie strictly inside (0, 1), got {r}")
        w = u + phi / TWO_PI
        w = w - np.floor(w)
        out = np.where(w < r, -1.0 + 2.0 * w / r, 1.0 - 2.0 * (w - r) / (1.0 - r))
    return float(out) if out.ndim == 0 else out


def power_term(x, alpha: float):
    return np.power(x, alpha)


def oscillatory_term(t, params: LpplParams):
    """The ``C * x**alpha * P`` part of the model."""
    x = distance_x(t, params.t_c, params.orientation)
    u = np.log(x) / math.log(params.lam)
    return params.C * np.power(x, params.alpha) * eval_shape(
        u, params.shape, params.phi, params.rise_fraction)


def eval_lppl(t, params: LpplParams):
    """Evaluate the model at time(s) ``t``."""
    x = distance_x(t, params.t_c, params.orientation)
    xa = np.power(x, params.alpha)
    u = np.log(x) / math.log(params.lam)
    p = eval_shape(u, params.shape, params.phi, params.rise_fraction)
    return params.A + params.B * xa + params.C * xa * p


def _check_window(params, t_from, t_to):
    if not t_from < t_to:
        raise UsageError("extrema window is empty or inverted")
    distance_x(np.array([t_from, t_to]), params.t_c, params.orientation)


def _t_of_x(params, x):
    if params.orientation is Orientation.BUBBLE:
        return params.t_c - x
    return params.t_c + x


def _cosine_extrema(params, t_from, t_to):
    # d/dx [x^a cos(w ln x + phi)] = 0  <=>  w ln x + phi = atan(a / w) + k*pi
    omega = params.omega
    theta0 = math.atan(params.alpha / omega)
    xs = np.abs(np.array([t_from, t_to]) - params.t_c)
    lo, hi = np.log(xs.min()), np.log(xs.max())
    k_lo = math.ceil((omega * lo + params.phi - theta0) / math.pi - 1e-12)
    k_hi = math.floor((omega * hi + params.phi - theta0) / math.pi + 1e-12)
    out = []
    for k in range(k_lo, k_hi + 1):
        x = math.exp((theta0 + k * math.pi - params.phi) / omega)
        t = _t_of_x(params, x)
        if not (t_from <= t <= t_to):
            continue
        # even k: cos > 0 at the stationary point, a maximum of x^a cos(.)
        is_max = (k % 2 == 0) == (params.C > 0)
        out.append((t, "max" if is_max else "min"))
    return sorted(out)


def _scan_extrema(params, t_from, t_to, per_period=400):
    xs = np.abs(np.array([t_from, t_to]) - params.t_c)
    lo, hi = np.log(xs.min()), np.log(xs.max())
    n_periods = (hi - lo) / math.log(params.lam)
    n = max(int(math.ceil(n_periods * per_period)), 50) + 1
    grid_lx = np.linspace(lo, hi, n)

    def f(lx):
        x = np.exp(lx)
        u = lx / math.log(params.lam)
        return params.C * np.power(x, params.alpha) * eval_shape(
            u, params.shape, params.phi, params.rise_fraction)

    vals = f(grid_lx)
    out = []
    for i in range(1, n - 1):
        left, mid, right = vals[i - 1], vals[i], vals[i + 1]
        if mid > left and mid >= right:
            kind, sign = "max", -1.0
        elif mid < left and mid <= right:
            kind, sign = "min", 1.0
        else:
            continue
        res = minimize_scalar(lambda z: sign * float(f(z)), bounds=(grid_lx[i - 1], grid_lx[i + 1]),
                              method="bounded", options={"xatol": 1e-12})
        t = _t_of_x(params, math.exp(res.x))
        if t_from <= t <= t_to:
            out.append((t, kind))
    out.sort()
    # plateaus can yield the same extremum twice
    dedup = []
    for t, kind in out:
        if dedup and dedup[-1][1] == kind and abs(dedup[-1][0] - t) < 1e-9:
            continue
        dedup.append((t, kind))
    return dedup


def extrema_points(params: LpplParams, t_from: float, t_to: float) -> list[tuple[float, str]]:
    """Local extrema ``(t, kind)`` of the oscillatory term inside ``[t_from, t_to]``.

    Cosine shapes are solved in closed form; other shapes use a dense scan in
    ``ln x`` followed by bounded scalar refinement of each bracket.
    """
    _check_window(params, t_from, t_to)
    if params.C == 0.0:
        return []
    if params.shape is Shape.COSINE:
        return _cosine_extrema(params, t_from, t_to)
    return _scan_extrema(params, t_from, t_to)


def extrema_times(params: LpplParams, t_from: float, t_to: float, kind: str | None = None) -> list[float]:
    """Ascending times of local extrema of the oscillatory term.

    Parameters
    ----------
    kind : {None, "max", "min"}
        Restrict to maxima or minima; ``None`` returns both.
    """
    if kind not in (None, "max", "min"):
        raise UsageError(f"kind must be None, 'max' or 'min', got {kind!r}")
    return [t for t, k in extrema_points(params, t_from, t_to) if kind is None or k == kind]
