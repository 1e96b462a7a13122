"""Price series container, calendar conversion and the basic transforms.

All model arithmetic runs on fractional years; calendar dates only appear at
the I/O boundary and are converted with exact leap-year day counts.
"""
from __future__ import annotations

import calendar
import csv
import enum
import math
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "DateStamp",
    "PriceSeries",
    "TransformState",
    "ColumnMap",
    "to_fractional_year",
    "from_fractional_year",
    "parse_date",
    "load_csv",
    "write_csv",
    "to_log",
    "normalize",
    "slice_series",
]


class TransformState(str, enum.Enum):
    RAW = "raw"
    LOG = "log"
    NORMALIZED = "normalized"


def _days_in_year(year: int) -> int:
    return 366 if calendar.isleap(year) else 365


def to_fractional_year(d: date) -> float:
    """Map a calendar date to ``year + (day_of_year - 1) / days_in_year``."""
    doy = d.timetuple().tm_yday
    return d.year + (doy - 1) / _days_in_year(d.year)


def from_fractional_year(t: float) -> date:
    """Inverse of :func:`to_fractional_year`, rounding to the nearest day.

    Values between two calendar days snap to the closer one; a value that
    rounds past the last day of its year rolls into January 1st.
    """
    year = math.floor(t)
    n_days = _days_in_year(year)
    offset = round((t - year) * n_days)
    return date(year, 1, 1) + timedelta(days=int(offset))


def parse_date(text: str) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"not an ISO-8601 date (YYYY-MM-DD): {text!r}") from None


@dataclass(frozen=True)
class DateStamp:
    year: int
    month: int
    day: int

    def __post_init__(self):
        date(self.year, self.month, self.day)  # raises on invalid calendar dates

    @classmethod
    def from_date(cls, d: date) -> "DateStamp":
        return cls(d.year, d.month, d.day)

    @classmethod
    def parse(cls, text: str) -> "DateStamp":
        return cls.from_date(parse_date(text))

    @classmethod
    def from_fractional(cls, t: float) -> "DateStamp":
        return cls.from_date(from_fractional_year(t))

    @property
    def date(self) -> date:
        return date(self.year, self.month, self.day)

    @property
    def fractional_year(self) -> float:
        return to_fractional_year(self.date)

    def isoformat(self) -> str:
        return self.date.isoformat()


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PriceSeries:
    """Ordered ``(t, v)`` samples on a fractional-year time axis.

    Parameters
    ----------
    t : array_like
        Strictly increasing fractional-year timestamps.
    v : array_like
        Values. Must be strictly positive while ``transform_state`` is raw.
    label : str
        Free-text instrument name.
    transform_state : TransformState
        Which view of the prices ``v`` holds.
    """

    t: np.ndarray
    v: np.ndarray
    label: str = ""
    transform_state: TransformState = TransformState.RAW

    def __post_init__(self):
        t = _frozen(self.t)
        v = _frozen(self.v)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "transform_state", TransformState(self.transform_state))
        if t.ndim != 1 or t.shape != v.shape:
            raise DataError("t and v must be one-dimensional and of equal length")
        if len(t) < 2:
            raise DataError(f"too few samples: {len(t)} (need at least 2)")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise DataError("series contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise DataError("timestamps must be strictly increasing")
        if self.transform_state is TransformState.RAW and np.any(v <= 0):
            raise DataError("raw prices must be strictly positive")

    def __len__(self) -> int:
        return len(self.t)

    def with_values(self, v, transform_state=None) -> "PriceSeries":
        return PriceSeries(self.t, v, self.label, transform_state or self.transform_state)

    @property
    def dates(self) -> list[date]:
        return [from_fractional_year(x) for x in self.t]


@dataclass(frozen=True)
class ColumnMap:
    """Where to find the date and value columns.

    Columns are given by header name or by zero-based position. A header row
    is detected automatically: a first row whose date field does not parse is
    taken as the header.
    """

    date: str | int = "date"
    value: str | int = "value"


def _resolve(col, header, default_pos):
    if isinstance(col, int):
        return col
    if header is None:
        return default_pos
    names = [h.strip().lower() for h in header]
    try:
        return names.index(col.lower())
    except ValueError:
        raise DataError(f"column {col!r} not found in header {header}") from None


def load_csv(path, columns: ColumnMap | None = None, label: str | None = None,
             transform_state=TransformState.RAW) -> PriceSeries:
    """Read a ``date,value`` CSV into a :class:`PriceSeries` sorted by date.

    Rows may appear in any order; duplicate dates are rejected rather than
    merged. Rows are numbered from 1 in error messages, counting the header.
    """
    columns = columns or ColumnMap()
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", newline="") as fh:
            rows = [r for r in csv.reader(fh)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc

    numbered = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not numbered:
        raise DataError("too few samples: 0 (need at least 2)")

    header = None
    first = numbered[0][1]
    probe = columns.date if isinstance(columns.date, int) else 0
    try:
        date.fromisoformat(first[probe].strip())
    except (ValueError, IndexError):
        header = first
        numbered = numbered[1:]
    di = _resolve(columns.date, header, 0)
    vi = _resolve(columns.value, header, 1)

    seen = {}
    for lineno, row in numbered:
        try:
            d_text, v_text = row[di], row[vi]
        except IndexError:
            raise DataError(f"row {lineno}: expected at least {max(di, vi) + 1} columns") from None
        try:
            d = date.fromisoformat(d_text.strip())
        except ValueError:
            raise DataError(f"row {lineno}: bad date {d_text!r}") from None
        try:
            v = float(v_text)
        except ValueError:
            raise DataError(f"row {lineno}: bad value {v_text!r}") from None
        if not math.isfinite(v):
            raise DataError(f"row {lineno}: non-finite value {v_text!r}")
        if TransformState(transform_state) is TransformState.RAW and v <= 0:
            raise DataError(f"row {lineno}: non-positive price {v}")
        if d in seen:
            raise DataError(f"row {lineno}: duplicate date {d.isoformat()} (first at row {seen[d][0]})")
        seen[d] = (lineno, v)

    if len(seen) < 2:
        raise DataError(f"too few samples: {len(seen)} (need at least 2)")
    ordered = sorted(seen.items())
    t = [to_fractional_year(d) for d, _ in ordered]
    v = [val for _, (_, val) in ordered]
    return PriceSeries(t, v, label if label is not None else path.stem, transform_state)


def write_csv(series: PriceSeries, path) -> None:
    from .io import atomic_write_text

    lines = ["date,value"]
    lines += [f"{from_fractional_year(t).isoformat()},{float(v)!r}" for t, v in zip(series.t, series.v)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def to_log(series: PriceSeries) -> PriceSeries:
    if series.transform_state is not TransformState.RAW:
        raise DataError(f"to_log expects a raw series, got {series.transform_state.value}")
    if np.any(series.v <= 0):
        raise DataError("log undefined for non-positive values")
    return series.with_values(np.log(series.v), TransformState.LOG)


def normalize(series: PriceSeries) -> PriceSeries:
    """Standardize values to zero mean and unit population standard deviation."""
    v = series.v
    sigma = v.std()
    if not sigma > 0:
        raise DataError("cannot normalize a constant series (zero standard deviation)")
    return series.with_values((v - v.mean()) / sigma, TransformState.NORMALIZED)


def slice_series(series: PriceSeries, start, end) -> PriceSeries:
    """Keep samples with ``start <= t <= end``.

    ``start`` and ``end`` may be :class:`DateStamp`, :class:`datetime.date`
    or fractional years.
    """
    lo, hi = _as_fractional(start), _as_fractional(end)
    if not lo < hi:
        raise DataError("slice range is empty or inverted")
    keep = (series.t >= lo) & (series.t <= hi)
    n = int(keep.sum())
    if n < 2:
        raise DataError(f"slice keeps {n} samples (need at least 2)")
    return PriceSeries(series.t[keep], series.v[keep], series.label, series.transform_state)


def _as_fractional(x) -> float:
    if isinstance(x, DateStamp):
        return x.fractional_year
    if isinstance(x, date):
        return to_fractional_year(x)
    return float(x)
