"""Dependency-free chart output: polyline SVG plus a tidy CSV.

The CSV is the data contract; the SVG is a quick look that needs no renderer.
Model curves are tagged ``class="curve"`` and observations
``class="observed"``, so a chart's content can be checked by counting tags.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .io import atomic_write_text
from .timeseries import from_fractional_year

__all__ = ["Trace", "Marker", "render_svg", "write_svg", "tidy_csv", "write_tidy_csv"]

WIDTH, HEIGHT = 900, 540
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


@dataclass
class Trace:
    label: str
    t: np.ndarray
    y: np.ndarray
    kind: str = "curve"  # "curve" or "observed"
    dashed: bool = False
    color: str | None = None


@dataclass
class Marker:
    t: float
    label: str = ""


@dataclass
class _Frame:
    x0: float
    x1: float
    y0: float
    y1: float
    ticks: list = field(default_factory=list)

    def px(self, t):
        return MARGIN_L + (np.asarray(t) - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y):
        return HEIGHT - MARGIN_B - (np.asarray(y) - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)


def _nice_ticks(lo, hi, n=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v):
    return f"{v:.2f}"


def render_svg(traces: list[Trace], markers: list[Marker] = (), title: str = "") -> str:
    ts = [tr.t for tr in traces if len(tr.t)] + [np.array([m.t for m in markers])]
    ys = [tr.y[np.isfinite(tr.y)] for tr in traces if len(tr.y)]
    all_t = np.concatenate(ts)
    all_y = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    x0, x1 = float(all_t.min()), float(all_t.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    pad = 0.05 * (y1 - y0 or 1.0)
    frame = _Frame(x0, x1, y0 - pad, y1 + pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    left, right = MARGIN_L, WIDTH - MARGIN_R
    top, bottom = MARGIN_T, HEIGHT - MARGIN_B
    out.append(f'<rect class="axes" x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               'fill="none" stroke="black"/>')
    for year in range(math.ceil(x0), math.floor(x1) + 1):
        xp = frame.px(year)
        out.append(f'<line x1="{_fmt(xp)}" y1="{bottom}" x2="{_fmt(xp)}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(xp)}" y="{bottom + 20}" text-anchor="middle">{year}</text>')
    for yv in _nice_ticks(frame.y0, frame.y1):
        yp = frame.py(yv)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(yp)}" x2="{left}" y2="{_fmt(yp)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(yp + 4)}" text-anchor="end">{yv:g}</text>')

    curve_i = 0
    for i, tr in enumerate(traces):
        ok = np.isfinite(tr.y)
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(frame.px(tr.t[ok]), frame.py(tr.y[ok])))
        if tr.kind == "observed":
            color = tr.color or "#7f7f7f"
            width = 1
        else:
            color = tr.color or COLORS[curve_i % len(COLORS)]
            curve_i += 1
            width = 2
        dash = ' stroke-dasharray="6,4"' if tr.dashed else ""
        out.append(f'<polyline class="{tr.kind}" data-label="{escape(tr.label)}" fill="none" '
                   f'stroke="{color}" stroke-width="{width}"{dash} points="{pts}"/>')
        ly = top + 16 + 16 * i
        out.append(f'<line x1="{left + 10}" y1="{ly - 4}" x2="{left + 35}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="{width}"{dash}/>')
        out.append(f'<text x="{left + 40}" y="{ly}">{escape(tr.label)}</text>')

    for m in markers:
        xp = frame.px(m.t)
        out.append(f'<line class="marker" x1="{_fmt(xp)}" y1="{top}" x2="{_fmt(xp)}" y2="{bottom}" '
                   'stroke="black" stroke-dasharray="2,3"/>')
        label = m.label or from_fractional_year(m.t).isoformat()
        out.append(f'<text x="{_fmt(xp - 4)}" y="{top + 12}" text-anchor="end">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, traces, markers=(), title="") -> None:
    atomic_write_text(path, render_svg(traces, markers, title))


def _cell(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    return repr(float(v))


def tidy_csv(t, columns: dict) -> str:
    """One row per sample: ``t, date, <columns...>``."""
    names = list(columns)
    lines = [",".join(["t", "date"] + names)]
    for i, ti in enumerate(t):
        row = [repr(float(ti)), from_fractional_year(ti).isoformat()]
        row += [_cell(columns[n][i]) for n in names]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_tidy_csv(path, t, columns: dict) -> None:
    atomic_write_text(path, tidy_csv(t, columns))
