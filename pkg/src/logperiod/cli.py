"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 fit failure. Errors are
reported as a one-line JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import DataError, FitError, LogPeriodError, UsageError
from .fitter import DAYS_PER_YEAR, FitConfig, FitResult, Grid, grid_fit, synth_at
from .io import atomic_write_text, dumps
from .model import LpplParams, Orientation, Shape, eval_lppl, extrema_points
from .plotting import Marker, Trace, write_svg, write_tidy_csv
from .spacing import TurningPoints, detect_extrema, tc_consensus
from .superposition import SuperpositionModel, fit_super_bubble, fit_superposition
from .timeseries import (
    ColumnMap,
    PriceSeries,
    from_fractional_year,
    load_csv,
    normalize,
    parse_date,
    slice_series,
    to_fractional_year,
    to_log,
)

SHAPES = {"cosine": Shape.COSINE, "cosmod": Shape.COSMOD, "saw": Shape.SAW}
CURVE_SAMPLES = 1000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _date_arg(text):
    try:
        return to_fractional_year(parse_date(text))
    except DataError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _iso(t: float) -> str:
    return from_fractional_year(t).isoformat()


def _common(p):
    g = p.add_argument_group("common options")
    g.add_argument("--input", type=Path, help="CSV with date,value columns")
    g.add_argument("--output", type=Path, help="write the JSON (or CSV) result here instead of stdout")
    g.add_argument("--plot", type=Path, help="write an SVG chart here and a tidy CSV next to it")
    target = g.add_mutually_exclusive_group()
    target.add_argument("--log-price", dest="log_price", action="store_true", default=True,
                        help="work on log prices (default)")
    target.add_argument("--raw-price", dest="log_price", action="store_false", help="work on raw prices")
    g.add_argument("--lambda", dest="lam", type=float, default=2.0, help="preferred scaling factor (default 2)")
    g.add_argument("--shape", choices=sorted(SHAPES), default="cosine")
    g.add_argument("--rise-fraction", type=float, default=0.3, help="saw shape rise fraction in (0, 1)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--date-column", default="date")
    g.add_argument("--value-column", default="value")


def _grid_opts(p, orientation_default="bubble"):
    g = p.add_argument_group("fit grid")
    g.add_argument("--orientation", choices=["bubble", "antibubble"], default=orientation_default)
    g.add_argument("--tc-min", type=_date_arg, help="earliest critical time (ISO date)")
    g.add_argument("--tc-max", type=_date_arg, help="latest critical time (ISO date)")
    g.add_argument("--tc-step-days", type=float, default=5.0)
    g.add_argument("--tc-horizon-years", type=float, default=4.0,
                   help="grid reach beyond the data when --tc-min/--tc-max are omitted")
    g.add_argument("--alpha-min", type=float, default=0.1)
    g.add_argument("--alpha-max", type=float, default=1.0)
    g.add_argument("--alpha-step", type=float, default=0.05)
    g.add_argument("--phi-steps", type=int, default=24, help="phase grid size for non-cosine shapes")
    g.add_argument("--no-refine", dest="refine", action="store_false")
    g.add_argument("--refine-tolerance", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="logperiod", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit one log-periodic component")
    _common(p)
    _grid_opts(p)
    p.add_argument("--from", dest="t_from", type=_date_arg, help="first date of the fit window")
    p.add_argument("--to", dest="t_to", type=_date_arg, help="last date of the fit window")
    p.add_argument("--normalize", action="store_true", help="standardize values before fitting")

    p = sub.add_parser("spacings", help="critical time from turning-point spacings")
    _common(p)
    p.add_argument("--points", help="comma-separated ISO dates of same-type turning points")
    p.add_argument("--window", type=int, default=10, help="extremum window half-width in samples")
    p.add_argument("--prominence", type=float, help="minimum prominence (default 0.25 * std)")
    p.add_argument("--kind", choices=["auto", "max", "min"], default="auto")

    p = sub.add_parser("forecast", help="extrapolate a fitted scenario")
    _common(p)
    p.add_argument("--params", type=Path, required=True, help="parameter, fit or superposition JSON")
    p.add_argument("--horizon", type=_date_arg, required=True, help="last forecast date")
    p.add_argument("--start", type=_date_arg, help="first forecast date (default: end of --input)")
    p.add_argument("--samples", type=int, default=CURVE_SAMPLES)

    p = sub.add_parser("superpose", help="two-stage anti-bubble plus bubble fit")
    _common(p)
    _grid_opts(p)
    p.add_argument("--stage-a", type=Path, required=True, help="fixed anti-bubble parameters JSON")

    p = sub.add_parser("superbubble", help="short-window component on the residual of a scenario")
    _common(p)
    _grid_opts(p)
    p.add_argument("--base", type=Path, required=True, help="long-term scenario JSON")
    p.add_argument("--from", dest="t_from", type=_date_arg, required=True)
    p.add_argument("--to", dest="t_to", type=_date_arg, required=True)

    p = sub.add_parser("synth", help="write a synthetic series generated from parameters")
    _common(p)
    p.add_argument("--params", type=Path, required=True)
    p.add_argument("--from", dest="t_from", type=_date_arg, required=True)
    p.add_argument("--to", dest="t_to", type=_date_arg, required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise std in model units")

    p = sub.add_parser("normalize", help="write the zero-mean, unit-std series")
    _common(p)
    return parser


# ---------------------------------------------------------------- helpers

def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from None


def load_scenario(path: Path):
    """Parameters from an LpplParams, FitResult or SuperpositionModel JSON file."""
    d = _read_json(path)
    if not isinstance(d, dict):
        raise DataError(f"{path} does not hold a JSON object")
    if "component_a" in d:
        try:
            return SuperpositionModel.from_dict(d)
        except UsageError as exc:
            raise DataError(str(exc)) from None
    if "params" in d:
        d = d["params"]
    try:
        return LpplParams.from_dict(d)
    except UsageError as exc:
        raise DataError(str(exc)) from None


def _raw_series(args) -> PriceSeries:
    if args.input is None:
        raise UsageError("--input is required")
    if not args.input.is_file():
        raise DataError(f"input file not found: {args.input}")
    return load_csv(args.input, ColumnMap(args.date_column, args.value_column))


def _target(args, series: PriceSeries, allow_normalize=True) -> PriceSeries:
    if args.log_price:
        series = to_log(series)
    if allow_normalize and getattr(args, "normalize", False):
        series = normalize(series)
    return series


def _config(args, series: PriceSeries, anchor_t=None) -> FitConfig:
    orientation = Orientation(args.orientation)
    step = args.tc_step_days / DAYS_PER_YEAR
    if args.tc_step_days <= 0:
        raise UsageError("--tc-step-days must be positive")
    anchor = series.t if anchor_t is None else anchor_t
    if orientation is Orientation.BUBBLE:
        lo = args.tc_min if args.tc_min is not None else float(anchor[-1]) + step
        hi = args.tc_max if args.tc_max is not None else float(anchor[-1]) + args.tc_horizon_years
    else:
        lo = args.tc_min if args.tc_min is not None else float(anchor[0]) - args.tc_horizon_years
        hi = args.tc_max if args.tc_max is not None else float(anchor[0]) - step
    if args.phi_steps < 1:
        raise UsageError("--phi-steps must be at least 1")
    return FitConfig(
        t_c_grid=Grid(lo, hi, step),
        orientation=orientation,
        shape=SHAPES[args.shape],
        rise_fraction=args.rise_fraction,
        lam=args.lam,
        alpha_grid=Grid(args.alpha_min, args.alpha_max, args.alpha_step),
        phi_grid=Grid(0.0, 2 * math.pi, 2 * math.pi / args.phi_steps, periodic=True),
        refine=args.refine,
        refine_tolerance=args.refine_tolerance,
    )


def _emit(args, payload) -> None:
    text = dumps(payload)
    if args.output is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(args.output, text)


def _plot_paths(path: Path):
    svg = path if path.suffix else path.with_suffix(".svg")
    return svg, svg.with_suffix(".csv")


def _dense(t0, t1, n=CURVE_SAMPLES):
    return np.linspace(t0, t1, n)


def _fit_payload(result: FitResult) -> dict:
    d = result.to_dict()
    d["t_c_date"] = _iso(result.params.t_c)
    return d


# ---------------------------------------------------------------- commands

def cmd_fit(args) -> int:
    series = _raw_series(args)
    if args.t_from is not None or args.t_to is not None:
        series = slice_series(series, args.t_from if args.t_from is not None else series.t[0],
                              args.t_to if args.t_to is not None else series.t[-1])
    target = _target(args, series)
    result = grid_fit(target, _config(args, target))
    _emit(args, _fit_payload(result))
    if args.plot:
        p = result.params
        svg, csv_path = _plot_paths(args.plot)
        td = _dense(target.t[0], target.t[-1])
        write_svg(svg, [Trace(target.label or "observed", target.t, target.v, kind="observed"),
                        Trace("fit", td, eval_lppl(td, p))],
                  [Marker(p.t_c, f"t_c {_iso(p.t_c)}")], title=f"{target.label} log-periodic fit")
        write_tidy_csv(csv_path, target.t, {"observed": target.v, "fitted": eval_lppl(target.t, p)})
    return 0


def _parse_points(text: str) -> list[float]:
    items = [s for s in (x.strip() for x in text.split(",")) if s]
    try:
        times = sorted(to_fractional_year(parse_date(s)) for s in items)
    except DataError as exc:
        raise UsageError(str(exc)) from None
    if len(times) < 3:
        raise UsageError(f"--points needs at least 3 dates, got {len(times)}")
    if len(set(times)) != len(times):
        raise UsageError("--points contains duplicate dates")
    return times


def cmd_spacings(args) -> int:
    series = None
    if args.points:
        points = TurningPoints.from_times(_parse_points(args.points))
        kind = "max"
    else:
        series = _target(args, _raw_series(args), allow_normalize=False)
        points = detect_extrema(series, args.window, args.prominence)
        kind = args.kind
    report = tc_consensus(points, kind=kind, lambda_assumed=args.lam)
    payload = report.to_dict()
    payload["tc_consensus_date"] = _iso(report.tc_consensus)
    _emit(args, payload)
    if args.plot and series is not None:
        svg, csv_path = _plot_paths(args.plot)
        markers = [Marker(p.t, p.kind) for p in report.points.points]
        markers.append(Marker(report.tc_consensus, f"t_c {_iso(report.tc_consensus)}"))
        write_svg(svg, [Trace(series.label or "observed", series.t, series.v, kind="observed")], markers,
                  title="turning-point spacings")
        used = {p.t for p in report.points.points}
        flags = np.array([1.0 if t in used else math.nan for t in series.t])
        write_tidy_csv(csv_path, series.t, {"observed": series.v, "turning_point": flags})
    return 0


def _components(scenario):
    if isinstance(scenario, SuperpositionModel):
        return [("component_a", scenario.component_a), ("component_b", scenario.component_b)]
    return [("component", scenario)]


def cmd_forecast(args) -> int:
    scenario = load_scenario(args.params)
    if args.start is not None:
        start = args.start
    elif args.input is not None:
        start = float(_raw_series(args).t[-1])
    else:
        raise UsageError("give --start or --input to fix the forecast start")
    end = args.horizon
    if not start < end:
        raise UsageError("forecast horizon must lie after its start")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    comps = _components(scenario)
    for name, p in comps:
        if p.orientation is Orientation.BUBBLE and not end < p.t_c:
            raise UsageError(f"horizon {_iso(end)} reaches the critical time {_iso(p.t_c)} of {name}; "
                             "the model is undefined at and after t_c")
        if p.orientation is Orientation.ANTIBUBBLE and not start > p.t_c:
            raise UsageError(f"forecast start precedes the critical time {_iso(p.t_c)} of {name}")
    td = _dense(start, end, args.samples)
    values = {name: eval_lppl(td, p) for name, p in comps}
    total = sum(values.values())
    turning = []
    for name, p in comps:
        for t, kind in extrema_points(p, start, end):
            item = {"t": t, "date": _iso(t), "kind": kind}
            if len(comps) > 1:
                item["component"] = name
            turning.append(item)
    turning.sort(key=lambda d: d["t"])
    bubble = [p for _, p in comps if p.orientation is Orientation.BUBBLE]
    deadline = min(p.t_c for p in bubble) if bubble else None
    payload = {
        "t_start": start,
        "t_end": end,
        "t_c": [p.t_c for _, p in comps] if len(comps) > 1 else comps[0][1].t_c,
        "deadline": deadline,
        "deadline_date": _iso(deadline) if deadline is not None else None,
        "turning_points": turning,
        "curve": [[float(a), float(b)] for a, b in zip(td, total)],
    }
    _emit(args, payload)
    if args.plot:
        svg, csv_path = _plot_paths(args.plot)
        markers = [Marker(d["t"], d["kind"]) for d in turning]
        if deadline is not None:
            markers.append(Marker(deadline, f"t_c {_iso(deadline)}"))
        write_svg(svg, [Trace("forecast", td, total)], markers, title="log-periodic scenario")
        write_tidy_csv(csv_path, td, {"fitted": total})
    return 0


def cmd_superpose(args) -> int:
    if not args.stage_a.is_file():
        raise DataError(f"stage-a file not found: {args.stage_a}")
    fixed_a = load_scenario(args.stage_a)
    if isinstance(fixed_a, SuperpositionModel):
        raise DataError("stage-a file must hold a single anti-bubble component")
    series = _target(args, _raw_series(args), allow_normalize=False)
    args.orientation = "bubble"
    model, _ = fit_superposition(series, fixed_a, _config(args, series))
    _emit(args, model.to_dict())
    if args.plot:
        svg, csv_path = _plot_paths(args.plot)
        td = _dense(series.t[0], series.t[-1])
        a, b = model.components(td)
        level = model.component_a.A
        write_svg(svg, [
            Trace(series.label or "observed", series.t, series.v, kind="observed"),
            Trace("component a (anti-bubble)", td, a, dashed=True),
            Trace("component b (bubble, on shared level)", td, b + level, dashed=True),
            Trace("sum", td, a + b),
        ], [Marker(model.component_b.t_c, f"t_c {_iso(model.component_b.t_c)}")],
            title="two-component log-periodic scenario")
        ca, cb = model.components(series.t)
        write_tidy_csv(csv_path, series.t, {"observed": series.v, "fitted": ca + cb,
                                            "component_a": ca, "component_b": cb})
    return 0


def cmd_superbubble(args) -> int:
    if not args.base.is_file():
        raise DataError(f"base scenario file not found: {args.base}")
    base = load_scenario(args.base)
    series = _target(args, _raw_series(args), allow_normalize=False)
    window = slice_series(series, args.t_from, args.t_to)
    result = fit_super_bubble(series, base, args.t_from, args.t_to, _config(args, window))
    _emit(args, _fit_payload(result))
    if args.plot:
        from .superposition import eval_scenario

        svg, csv_path = _plot_paths(args.plot)
        td = _dense(window.t[0], window.t[-1])
        base_curve = eval_scenario(td, base)
        boost = eval_lppl(td, result.params)
        write_svg(svg, [
            Trace(series.label or "observed", window.t, window.v, kind="observed"),
            Trace("long-term scenario", td, base_curve, dashed=True),
            Trace("scenario + super-bubble", td, base_curve + boost),
        ], [Marker(result.params.t_c, f"t_c {_iso(result.params.t_c)}")], title="super-bubble")
        bw = eval_scenario(window.t, base)
        write_tidy_csv(csv_path, window.t, {"observed": window.v, "fitted": bw + eval_lppl(window.t, result.params),
                                            "component_a": bw, "component_b": eval_lppl(window.t, result.params)})
    return 0


def cmd_synth(args) -> int:
    scenario = load_scenario(args.params)
    if not args.t_from < args.t_to:
        raise UsageError("--from must precede --to")
    if args.n < 4:
        raise UsageError("--n must be at least 4")
    # equally spaced instants snapped to calendar days, evaluated at the exact day
    days = sorted({from_fractional_year(t) for t in np.linspace(args.t_from, args.t_to, args.n)})
    t = np.array([to_fractional_year(d) for d in days])
    if isinstance(scenario, SuperpositionModel):
        model = SuperpositionModel(scenario.component_a, scenario.component_b,
                                   min(scenario.t_lo, t[0]), max(scenario.t_hi, t[-1]))
        a, b = model.components(t)
        clean = a + b
        if args.noise < 0:
            raise UsageError("--noise must be non-negative")
        noise = np.random.default_rng(args.seed).normal(0.0, args.noise, len(t)) if args.noise > 0 else 0.0
        values = clean + noise
    else:
        values = synth_at(scenario, t, args.noise, args.seed).v
    if args.log_price:
        values = np.exp(values)
    elif np.any(values <= 0):
        raise DataError("raw-price synthetic values must be positive; use --log-price or shift A")
    lines = ["date,value"] + [f"{d.isoformat()},{v!r}" for d, v in zip(days, map(float, values))]
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(args.output, text)
    return 0


def cmd_normalize(args) -> int:
    series = normalize(_target(args, _raw_series(args), allow_normalize=False))
    lines = ["date,value"] + [f"{_iso(t)},{float(v)!r}" for t, v in zip(series.t, series.v)]
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(args.output, text)
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "spacings": cmd_spacings,
    "forecast": cmd_forecast,
    "superpose": cmd_superpose,
    "superbubble": cmd_superbubble,
    "synth": cmd_synth,
    "normalize": cmd_normalize,
}

EXIT_CODES = {UsageError: 1, DataError: 2, FitError: 3}


def _fail(kind: str, code: int, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "exit_code": code, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", 1, str(exc))
    except DataError as exc:
        return _fail("data", 2, str(exc))
    except FitError as exc:
        return _fail("fit", 3, str(exc))
    except LogPeriodError as exc:  # pragma: no cover - every subclass is mapped above
        return _fail("data", 2, str(exc))
    except OSError as exc:
        return _fail("data", 2, str(exc))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
