"""Fit-free critical-time estimation from turning-point spacings.

Log-periodic turning points sit at distances from ``t_c`` that form a
geometric progression, so consecutive spacings contract by a constant ratio
and three consecutive same-type turning times fix the accumulation point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import peak_prominences

from .errors import DataError, UsageError
from .model import DEFAULT_LAMBDA, Orientation
from .timeseries import PriceSeries

__all__ = [
    "TurningPoint",
    "TurningPoints",
    "SpacingReport",
    "detect_extrema",
    "default_prominence",
    "spacing_ratios",
    "tc_from_triple",
    "tc_consensus",
    "implied_lambda",
]


@dataclass(frozen=True)
class TurningPoint:
    t: float
    v: float | None
    kind: str  # "max" or "min"


@dataclass(frozen=True)
class TurningPoints:
    """Detected (or user-supplied) turning points in time order."""

    points: tuple
    window: int | None = None
    prominence: float | None = None

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        for p in pts:
            if p.kind not in ("max", "min"):
                raise UsageError(f"turning point kind must be 'max' or 'min', got {p.kind!r}")
        ts = [p.t for p in pts]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DataError("turning point times must be strictly increasing")

    def __len__(self):
        return len(self.points)

    @property
    def times(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    def of_kind(self, kind: str) -> "TurningPoints":
        return TurningPoints(tuple(p for p in self.points if p.kind == kind), self.window, self.prominence)

    @classmethod
    def from_times(cls, times, kind="max") -> "TurningPoints":
        return cls(tuple(TurningPoint(float(t), None, kind) for t in times))


@dataclass(frozen=True)
class SpacingReport:
    points: TurningPoints
    ratios: list
    tc_estimates: list  # None where the triple had no finite accumulation point
    tc_consensus: float
    tc_dispersion: float
    lambda_assumed: float
    orientation: Orientation

    def to_dict(self) -> dict:
        return {
            "lambda_assumed": self.lambda_assumed,
            "orientation": self.orientation.value,
            "ratios": list(self.ratios),
            "tc_estimates": list(self.tc_estimates),
            "tc_consensus": self.tc_consensus,
            "tc_dispersion": self.tc_dispersion,
            "points": [[p.t, p.v, p.kind] for p in self.points.points],
        }


def default_prominence(series: PriceSeries) -> float:
    """A quarter of the population standard deviation of the values."""
    return 0.25 * float(np.std(series.v))


def detect_extrema(series: PriceSeries, w: int = 10, p: float | None = None) -> TurningPoints:
    """Local maxima and minima by centered window and prominence.

    A sample is a maximum candidate when it is strictly larger than every
    other sample in its ``2w + 1`` window; it is kept when its topographic
    prominence (height above the higher of the two bases separating it from
    taller terrain, see :func:`scipy.signal.peak_prominences`) is at least
    ``p``. Minima mirror this on the negated values. Samples closer than
    ``w`` to either end are never reported.

    Parameters
    ----------
    w : int
        Half-width of the window in samples.
    p : float, optional
        Minimum prominence; defaults to :func:`default_prominence`.
    """
    if int(w) != w or w < 1:
        raise UsageError(f"window half-width must be an integer >= 1, got {w}")
    w = int(w)
    if p is None:
        p = default_prominence(series)
    if p < 0:
        raise UsageError("prominence must be non-negative")
    v = series.v
    if len(v) < 2 * w + 1:
        raise DataError(f"series of {len(v)} samples is too short for window half-width {w}")

    win = sliding_window_view(v, 2 * w + 1)
    centre = win[:, w]
    others_max = np.maximum(win[:, :w].max(axis=1), win[:, w + 1:].max(axis=1))
    others_min = np.minimum(win[:, :w].min(axis=1), win[:, w + 1:].min(axis=1))
    max_idx = np.flatnonzero(centre > others_max) + w
    min_idx = np.flatnonzero(centre < others_min) + w

    keep = {}
    if len(max_idx):
        prom = peak_prominences(v, max_idx)[0]
        keep.update((int(i), "max") for i in max_idx[prom >= p])
    if len(min_idx):
        prom = peak_prominences(-v, min_idx)[0]
        keep.update((int(i), "min") for i in min_idx[prom >= p])
    pts = [TurningPoint(float(series.t[i]), float(v[i]), keep[i]) for i in sorted(keep)]
    return TurningPoints(tuple(pts), w, float(p))


def _select(points: TurningPoints, kind: str) -> TurningPoints:
    if kind == "auto":
        n_max = sum(p.kind == "max" for p in points.points)
        n_min = len(points) - n_max
        kind = "max" if n_max >= n_min else "min"
    if kind == "any":
        return points
    if kind not in ("max", "min"):
        raise UsageError(f"kind must be 'auto', 'any', 'max' or 'min', got {kind!r}")
    return points.of_kind(kind)


def _forward_ratios(times):
    gaps = np.diff(times)
    if np.any(gaps == 0):
        raise DataError("zero spacing between turning points")
    return gaps[:-1] / gaps[1:]


def _orientation_of(forward):
    # contracting spacings accumulate ahead (bubble); expanding ones trace back to a past t_c
    return Orientation.BUBBLE if np.median(forward) >= 1.0 else Orientation.ANTIBUBBLE


def spacing_ratios(points: TurningPoints, same_kind_only: bool = True, kind: str = "auto") -> list[float]:
    """Consecutive-spacing ratios ``(t[n+1]-t[n]) / (t[n+2]-t[n+1])``.

    When the spacings grow over time (a decelerating, anti-bubble sequence)
    the reciprocal is reported, so that contraction toward the accumulation
    point always reads as a ratio above one.

    With ``same_kind_only`` only one kind of turning point is used; ``kind``
    picks which ("auto" takes the more numerous kind, maxima on a tie).
    """
    pts = _select(points, kind) if same_kind_only else points
    if len(pts) < 3:
        raise DataError(f"need at least 3 turning points, got {len(pts)}")
    forward = _forward_ratios(pts.times)
    if _orientation_of(forward) is Orientation.ANTIBUBBLE:
        return [float(r) for r in 1.0 / forward]
    return [float(r) for r in forward]


def tc_from_triple(t1: float, t2: float, t3: float) -> float:
    """Accumulation point of the geometric progression through three times.

    ``T_c = (t2**2 - t1*t3) / (2*t2 - t1 - t3)``; raises when the spacings
    are equal (no finite accumulation point).
    """
    if not (t1 < t2 < t3):
        raise DataError(f"turning times must be strictly increasing, got ({t1}, {t2}, {t3})")
    # shift to t2 so that the products stay well conditioned for calendar-year offsets
    a = t1 - t2
    c = t3 - t2
    den = -a - c
    if abs(den) <= 1e-12 * max(abs(a), abs(c)):
        raise DataError("equal spacings: the triple has no finite accumulation point")
    return t2 + (-a * c) / den


def tc_consensus(points: TurningPoints, kind: str = "auto",
                 lambda_assumed: float = DEFAULT_LAMBDA) -> SpacingReport:
    """Median critical time over all consecutive same-kind triples.

    Degenerate triples are skipped (their estimate is reported as ``None``);
    the call fails only when every triple is degenerate.
    """
    pts = _select(points, kind)
    if len(pts) < 3:
        raise DataError(f"need at least 3 same-kind turning points, got {len(pts)}")
    times = pts.times
    forward = _forward_ratios(times)
    orientation = _orientation_of(forward)
    ratios = [float(r) for r in (forward if orientation is Orientation.BUBBLE else 1.0 / forward)]
    estimates = []
    for i in range(len(times) - 2):
        try:
            estimates.append(tc_from_triple(times[i], times[i + 1], times[i + 2]))
        except DataError:
            estimates.append(None)
    valid = np.array([e for e in estimates if e is not None])
    if len(valid) == 0:
        raise DataError("every turning-point triple is degenerate")
    return SpacingReport(
        points=pts,
        ratios=ratios,
        tc_estimates=[None if e is None else float(e) for e in estimates],
        tc_consensus=float(np.median(valid)),
        tc_dispersion=float(np.std(valid)),
        lambda_assumed=float(lambda_assumed),
        orientation=orientation,
    )


def implied_lambda(t1: float, t2: float, t3: float) -> float:
    """Spacing ratio of a triple, oriented to be >= 1 for a contracting sequence."""
    r = (t2 - t1) / (t3 - t2)
    return r if r >= 1.0 else 1.0 / r

