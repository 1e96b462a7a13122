"""Log-periodic power-law fitting and critical-time estimation for price series."""
from ._kernels import BACKEND
from .errors import DataError, FitError, LogPeriodError, SingularFitError, UsageError
from .fitter import FitConfig, FitResult, Grid, cost_profile, grid_fit, linear_subfit, synth, synth_at
from .model import (
    LpplParams,
    Orientation,
    ScalingLaw,
    Shape,
    alpha_from_gamma,
    distance_x,
    eval_lppl,
    eval_shape,
    extrema_times,
    omega_from_lambda,
)
from .spacing import TurningPoints, detect_extrema, spacing_ratios, tc_consensus, tc_from_triple
from .superposition import SuperpositionModel, eval_superposition, fit_super_bubble, fit_superposition
from .timeseries import DateStamp, PriceSeries, TransformState, load_csv, normalize, slice_series, to_log

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DataError", "FitError", "LogPeriodError", "SingularFitError", "UsageError",
    "FitConfig", "FitResult", "Grid", "cost_profile", "grid_fit", "linear_subfit", "synth", "synth_at",
    "LpplParams", "Orientation", "ScalingLaw", "Shape", "alpha_from_gamma", "distance_x", "eval_lppl",
    "eval_shape", "extrema_times", "omega_from_lambda",
    "TurningPoints", "detect_extrema", "spacing_ratios", "tc_consensus", "tc_from_triple",
    "SuperpositionModel", "eval_superposition", "fit_super_bubble", "fit_superposition",
    "DateStamp", "PriceSeries", "TransformState", "load_csv", "normalize", "slice_series", "to_log",
]
