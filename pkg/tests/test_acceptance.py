"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
happen; they are also collected in the terminal summary.
"""
import json
import math
import os
import time

import numpy as np
import pytest

from logperiod.cli import main
from logperiod.fitter import FitConfig, Grid, grid_fit, synth
from logperiod.model import LpplParams, Orientation, Shape, extrema_times, omega_from_lambda, power_term
from logperiod.spacing import TurningPoints, detect_extrema, spacing_ratios, tc_consensus, tc_from_triple
from logperiod.superposition import fit_superposition
from logperiod.timeseries import PriceSeries, TransformState, normalize

from conftest import ACCEPTANCE, FIXTURES

pytestmark = pytest.mark.acceptance

SHAPES = [Shape.COSINE, Shape.COSMOD, Shape.SAW]


def report(n, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert passed, line


def test_1_omega_lambda_relation():
    got = omega_from_lambda(2.0)
    # independent oracle: mpmath at 30 digits gives 2*pi/ln 2 = 9.06472028365438761925536589143
    oracle = 9.06472028365438761925536589143
    err = abs(got - 9.06472)
    report(1, err <= 1e-5 and abs(got - oracle) < 1e-12,
           f"omega_from_lambda(2) = {got:.10f}, |diff from 9.06472| = {err:.2e} (tol 1e-5)")


def test_2_power_term_self_similarity():
    rng = np.random.default_rng(20240101)
    lam = 2.0
    worst = 0.0
    for _ in range(100):
        alpha = rng.uniform(0.0, 1.5)
        x = rng.uniform(1e-3, 20.0)
        lhs = power_term(lam * x, alpha)
        rhs = lam ** alpha * power_term(x, alpha)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    report(2, worst <= 1e-10, f"100 draws, worst relative error {worst:.2e} (tol 1e-10)")


def test_3_spacing_law():
    worst_ratio = worst_tc = 0.0
    n_triples = 0
    for t_c in (2009.833, 2008.2, 1995.5):
        for phi in (0.0, 1.0, 4.0):
            p = LpplParams(t_c=t_c, alpha=0.0, C=1.0, phi=phi)
            for kind in ("max", "min"):
                t = extrema_times(p, t_c - 16.0, t_c - 0.01, kind=kind)
                ratios = spacing_ratios(TurningPoints.from_times(t, kind))
                worst_ratio = max(worst_ratio, max(abs(r - 2.0) for r in ratios))
                for i in range(len(t) - 2):
                    worst_tc = max(worst_tc, abs(tc_from_triple(t[i], t[i + 1], t[i + 2]) - t_c))
                    n_triples += 1
    report(3, worst_ratio <= 1e-9 and worst_tc <= 1e-9,
           f"{n_triples} triples, worst |ratio - 2| = {worst_ratio:.2e}, worst |t_c error| = {worst_tc:.2e} "
           "(tol 1e-9)")


def _roundtrip_case(i, rng):
    shape = SHAPES[i % 3]
    t_end = 2007.0
    p = LpplParams(
        t_c=t_end + rng.uniform(0.25, 1.5),
        alpha=rng.uniform(0.2, 0.8),
        A=7.0,
        B=-rng.uniform(0.5, 1.0),
        C=rng.uniform(0.05, 0.1) * (1 if rng.random() < 0.5 else -1),
        phi=rng.uniform(0.0, 2 * math.pi),
        shape=shape,
    )
    cfg = FitConfig(t_c_grid=Grid(t_end + 5 / 365.25, t_end + 2.0, 5 / 365.25), shape=shape)
    return p, cfg, t_end


def test_4_roundtrip_recovery():
    rng = np.random.default_rng(20240501)
    start = time.perf_counter()
    within_noisy = within_clean = 0
    errors = []
    for i in range(50):
        p, cfg, t_end = _roundtrip_case(i, rng)
        clean = synth(p, t_end - 5.0, t_end, 1000)
        sigma = 0.005 * float(np.ptp(clean.v))
        noisy = synth(p, t_end - 5.0, t_end, 1000, sigma, seed=1000 + i)
        e_clean = grid_fit(clean, cfg).params.t_c - p.t_c
        e_noisy = grid_fit(noisy, cfg).params.t_c - p.t_c
        within_clean += abs(e_clean) <= 0.01
        within_noisy += abs(e_noisy) <= 0.05
        errors.append(abs(e_noisy))
    elapsed = time.perf_counter() - start
    report(4, within_noisy >= 45 and within_clean == 50 and elapsed < 60.0,
           f"noisy {within_noisy}/50 within 0.05 yr (need 45), noiseless {within_clean}/50 within 0.01 yr "
           f"(need 50), median noisy error {np.median(errors):.4f} yr, {elapsed:.1f} s (target < 60 s)")


def test_5_cross_method_agreement():
    rng = np.random.default_rng(777)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(8):
        t_end = 2007.0
        p = LpplParams(t_c=t_end + rng.uniform(0.15, 0.5), alpha=rng.uniform(0.2, 0.8), A=7.0,
                       B=-rng.uniform(0.2, 0.5), C=rng.uniform(0.05, 0.1), phi=rng.uniform(0, 2 * math.pi))
        s = synth(p, t_end - 5.0, t_end, 1000)
        # noiseless input: every strict window extremum is a real turning point
        spacing_tc = tc_consensus(detect_extrema(s, w=10, p=0.0)).tc_consensus
        fit_tc = grid_fit(s, FitConfig.for_series(s, Orientation.BUBBLE)).params.t_c
        worst = max(worst, abs(spacing_tc - fit_tc))
    elapsed = time.perf_counter() - start
    report(5, worst <= 0.1 and elapsed < 5.0,
           f"8 series, worst |spacing t_c - fit t_c| = {worst:.4f} yr (tol 0.1), {elapsed:.1f} s (target < 5 s)")


def test_6_superposition_consistency():
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    worst = 0.0
    t = np.linspace(2002.0, 2007.0, 1000)
    for i in range(10):
        a = LpplParams(t_c=2002.0 - rng.uniform(0.5, 2.0), alpha=rng.uniform(0.3, 0.7), A=6.5,
                       B=rng.uniform(0.2, 0.4), C=rng.uniform(0.03, 0.06), phi=rng.uniform(0, 2 * math.pi),
                       orientation=Orientation.ANTIBUBBLE)
        b = LpplParams(t_c=2007.0 + rng.uniform(0.2, 1.0), alpha=rng.uniform(0.2, 0.8),
                       B=-rng.uniform(0.15, 0.3), C=rng.uniform(0.02, 0.04), phi=rng.uniform(0, 2 * math.pi))
        clean = synth(a, 2002.0, 2007.0, 1000).v + synth(b, 2002.0, 2007.0, 1000).v
        sigma = 0.005 * float(np.ptp(clean))
        v = clean + np.random.default_rng(600 + i).normal(0.0, sigma, len(t))
        s = PriceSeries(t, v, transform_state=TransformState.LOG)
        model, _ = fit_superposition(s, a, FitConfig.for_series(s, Orientation.BUBBLE, horizon_years=2.0))
        worst = max(worst, abs(model.component_b.t_c - b.t_c))
    elapsed = time.perf_counter() - start
    report(6, worst <= 0.05 and elapsed < 30.0,
           f"10 two-component series at 0.5% noise, worst component_b t_c error {worst:.4f} yr (tol 0.05), "
           f"{elapsed:.1f} s (target < 30 s)")


def test_7_normalization_argmin_invariance():
    rng = np.random.default_rng(7)
    worst_steps = 0.0
    affine_ok = True
    for i, shape in enumerate(SHAPES * 2):
        p = LpplParams(t_c=2007.0 + rng.uniform(0.3, 1.2), alpha=rng.uniform(0.2, 0.8), A=7.0,
                       B=-rng.uniform(0.5, 1.0), C=rng.uniform(0.05, 0.1), phi=rng.uniform(0, 2 * math.pi),
                       shape=shape)
        s = synth(p, 2002.0, 2007.0, 1000, 0.01, seed=70 + i)
        cfg = FitConfig.for_series(s, Orientation.BUBBLE, horizon_years=2.0, shape=shape)
        base = grid_fit(s, cfg).params
        fitted = grid_fit(normalize(s), cfg).params
        step = cfg.refine_tolerance * cfg.t_c_grid.step
        worst_steps = max(worst_steps, abs(fitted.t_c - base.t_c) / step)
        mu, sd = float(np.mean(s.v)), float(np.std(s.v))
        affine_ok &= math.isclose(fitted.A, (base.A - mu) / sd, rel_tol=1e-6, abs_tol=1e-9)
        affine_ok &= math.isclose(fitted.B, base.B / sd, rel_tol=1e-6)
        affine_ok &= math.isclose(fitted.C, base.C / sd, rel_tol=1e-6)
    report(7, worst_steps <= 1.0 and affine_ok,
           f"6 series over 3 shapes, worst t_c shift {worst_steps:.3f} refine_tolerance steps (tol 1), "
           f"(A, B, C) affine: {affine_ok}")


SP500 = os.environ.get("LOGPERIOD_SP500_CSV")


@pytest.mark.skipif(not SP500, reason="set LOGPERIOD_SP500_CSV to a date,value file of S&P500 closes")
def test_8_sp500_reproduction(capsys):
    code = main(["fit", "--input", SP500, "--from", "2001-01-01", "--to", "2007-02-23", "--orientation", "bubble"])
    out = json.loads(capsys.readouterr().out)
    target = 2009 + 304 / 365  # 2009-11-01
    days = abs(out["params"]["t_c"] - target) * 365.25
    report(8, code == 0 and days <= 90, f"S&P500 fit t_c {out['t_c_date']}, {days:.0f} days from 2009-11-01 "
                                        "(tol 90)")


def test_8_recorded_when_skipped():
    if not SP500:
        ACCEPTANCE[8] = ("[SKIP] criterion 8: data-dependent; set LOGPERIOD_SP500_CSV (see README, "
                         "reproduction recipe)")


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_9_determinism(tmp_path, capsys):
    fx = FIXTURES
    (tmp_path / "sp.json").write_text(json.dumps({
        "t_c": 2007.3, "lambda": 2.0, "alpha": 0.5, "phi": 1.0, "A": 7.0, "B": -0.8, "C": 0.08,
        "shape": "cosine", "rise_fraction": 0.3, "orientation": "bubble"}))
    _run(["synth", "--params", tmp_path / "sp.json", "--from", "2002-01-01", "--to", "2007-01-01",
          "--output", tmp_path / "near.csv"], capsys)
    commands = {
        "fit": ["fit", "--input", fx / "bubble.csv", "--shape", "cosmod", "--phi-steps", "12"],
        "spacings": ["spacings", "--input", tmp_path / "near.csv", "--prominence", "0"],
        "forecast": ["forecast", "--params", fx / "bubble_truth.json", "--input", fx / "bubble.csv",
                     "--horizon", "2009-06-01"],
        "superpose": ["superpose", "--input", fx / "two_component.csv", "--stage-a", fx / "stage_a.json"],
        "superbubble": ["superbubble", "--input", fx / "two_component.csv", "--base",
                        fx / "two_component_truth.json", "--from", "2005-01-01", "--to", "2006-06-30",
                        "--tc-horizon-years", "1"],
        "synth": ["synth", "--params", fx / "bubble_truth.json", "--from", "2002-01-01", "--to", "2003-01-01",
                  "--noise", "0.01", "--seed", "42"],
        "normalize": ["normalize", "--input", fx / "bubble.csv"],
    }
    same = []
    for name, argv in commands.items():
        c1, o1 = _run(argv, capsys)
        c2, o2 = _run(argv, capsys)
        if c1 == c2 == 0 and o1 == o2 and o1:
            same.append(name)
    report(9, len(same) == len(commands),
           f"byte-identical repeat output for {len(same)}/{len(commands)} commands ({', '.join(same)})")
