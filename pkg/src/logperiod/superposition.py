"""Two-component scenarios: a decelerating anti-bubble plus an accelerating bubble.

Component weights live in each component's own ``(B, C)`` amplitudes. The
shared price level is carried by the anti-bubble component; the bubble
component's ``A`` is always zero. Fitting is two-stage: the anti-bubble is
fixed, and the bubble is fitted to what it leaves unexplained.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .fitter import FitConfig, FitResult, _fit_arrays
from .model import LpplParams, Orientation, Shape, eval_lppl
from .timeseries import PriceSeries

__all__ = [
    "SuperpositionModel",
    "eval_superposition",
    "fit_superposition",
    "fit_super_bubble",
    "eval_scenario",
]


@dataclass(frozen=True)
class SuperpositionModel:
    component_a: LpplParams
    component_b: LpplParams
    t_lo: float
    t_hi: float

    def __post_init__(self):
        a, b = self.component_a, self.component_b
        if a.orientation is not Orientation.ANTIBUBBLE:
            raise UsageError("component_a must have anti-bubble orientation")
        if b.orientation is not Orientation.BUBBLE:
            raise UsageError("component_b must have bubble orientation")
        if not (a.t_c < self.t_lo <= self.t_hi < b.t_c):
            raise UsageError(
                f"critical times must bracket the span: need {a.t_c} < {self.t_lo} <= {self.t_hi} < {b.t_c}")
        if a.lam != b.lam:
            raise UsageError("both components must share the same scaling factor lambda")
        if b.A != 0.0:
            # fold the bubble's level into the shared offset
            object.__setattr__(self, "component_a", a.replace(A=a.A + b.A))
            object.__setattr__(self, "component_b", b.replace(A=0.0))

    def to_dict(self) -> dict:
        return {
            "component_a": self.component_a.to_dict(),
            "component_b": self.component_b.to_dict(),
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SuperpositionModel":
        try:
            return cls(LpplParams.from_dict(d["component_a"]), LpplParams.from_dict(d["component_b"]),
                       float(d["t_lo"]), float(d["t_hi"]))
        except (KeyError, TypeError) as exc:
            raise DataError(f"invalid superposition record: {exc}") from None

    def components(self, t):
        """Values of ``(component_a, component_b)`` at ``t``."""
        return eval_lppl(t, self.component_a), eval_lppl(t, self.component_b)


def eval_superposition(t, model: SuperpositionModel):
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < model.t_lo) | (t_arr > model.t_hi)):
        raise DataError(f"evaluation time outside the valid span [{model.t_lo}, {model.t_hi}]")
    a, b = model.components(t_arr)
    return a + b


def eval_scenario(t, model):
    """Evaluate either a single component or a :class:`SuperpositionModel`."""
    if isinstance(model, SuperpositionModel):
        return eval_superposition(t, model)
    return eval_lppl(t, model)


def _flat_result(t, residual, config: FitConfig, target_transform) -> FitResult:
    # nothing left to explain: every node ties at the same rss and the
    # tie-break lands on the smallest t_c and alpha with zero amplitudes
    level = float(residual[0])
    tcs = config.t_c_grid.values()
    alphas = config.alpha_grid.values()
    params = LpplParams(t_c=float(tcs[0]), alpha=float(alphas[0]), A=level, B=0.0, C=0.0,
                        lam=config.lam, shape=config.shape, rise_fraction=config.rise_fraction,
                        orientation=config.orientation)
    n_phi = 1 if config.shape is Shape.COSINE else len(config.phi_grid.values())
    return FitResult(params=params, rss=0.0, rmse=0.0, n_samples=len(t),
                     grid_evaluations=len(tcs) * len(alphas) * n_phi,
                     cost_profile=[(float(tc), 0.0) for tc in tcs],
                     target_transform=target_transform, grid_best_rss=0.0)


def _fit_residual(t, residual, config, target_transform) -> FitResult:
    config.validate_against(t)
    if np.ptp(residual) == 0.0:
        return _flat_result(t, residual, config, target_transform)
    return _fit_arrays(t, residual, config, target_transform)


def fit_superposition(series: PriceSeries, fixed_a: LpplParams,
                      config_b: FitConfig) -> tuple[SuperpositionModel, FitResult]:
    """Fit the bubble component on the residual of a fixed anti-bubble.

    Returns the canonicalized model and the stage-two fit (whose ``params``
    still carry the residual level in ``A``).
    """
    if fixed_a.orientation is not Orientation.ANTIBUBBLE:
        raise UsageError("fixed component must have anti-bubble orientation")
    if config_b.orientation is not Orientation.BUBBLE:
        raise UsageError("second-stage component must have bubble orientation")
    t = series.t
    if not fixed_a.t_c < t[0]:
        raise DataError("series starts before the anti-bubble critical time")
    residual = series.v - eval_lppl(t, fixed_a)
    result = _fit_residual(t, residual, config_b, series.transform_state)
    model = SuperpositionModel(fixed_a, result.params, float(t[0]), float(t[-1]))
    return model, result


def fit_super_bubble(series: PriceSeries, base, t_from: float, t_to: float,
                     config: FitConfig) -> FitResult:
    """Fit a short-window bubble on the residual of a long-term scenario.

    ``base`` is an :class:`LpplParams` or a :class:`SuperpositionModel`; only
    samples with ``t_from <= t <= t_to`` enter the fit.
    """
    if not t_from < t_to:
        raise UsageError("super-bubble window is empty or inverted")
    keep = (series.t >= t_from) & (series.t <= t_to)
    if keep.sum() < 2:
        raise DataError("super-bubble window holds fewer than 2 samples")
    t = series.t[keep]
    residual = series.v[keep] - eval_scenario(t, base)
    if not np.all(np.isfinite(residual)):
        raise DataError("base scenario is not finite inside the window")
    return _fit_residual(t, residual, config, series.transform_state)
