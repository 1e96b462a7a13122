import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from logperiod.errors import DataError, FitError, SingularFitError, UsageError
from logperiod.fitter import (
    FitConfig,
    FitResult,
    Grid,
    _design,
    fit_threads,
    cost_profile,
    grid_fit,
    linear_subfit,
    synth,
    synth_at,
)
from logperiod.model import LpplParams, Orientation, Shape
from logperiod.timeseries import PriceSeries, TransformState

from conftest import bubble_params

T_END = 2007.0
TC_GRID = Grid(T_END + 0.02, T_END + 1.5, 0.02)


def _series(params, n=400, noise=0.0, seed=0):
    return synth(params, T_END - 5.0, T_END, n, noise, seed)


def _cfg(shape=Shape.COSINE, **kw):
    return FitConfig(t_c_grid=kw.pop("t_c_grid", TC_GRID), shape=shape, **kw)


# ---------------------------------------------------------------- grids and config

def test_grid_values():
    assert np.allclose(Grid(0.1, 1.0, 0.05).values(), np.arange(19) * 0.05 + 0.1)
    assert len(Grid(0.1, 1.0, 0.05).values()) == 19
    phi = Grid(0.0, 2 * math.pi, 2 * math.pi / 24, periodic=True).values()
    assert len(phi) == 24 and phi[-1] < 2 * math.pi
    assert list(Grid(3.0, 3.0, 1.0).values()) == [3.0]
    for bad in [(1.0, 0.0, 0.1), (0.0, 1.0, 0.0), (0.0, math.inf, 0.1)]:
        with pytest.raises(UsageError):
            Grid(*bad)


def test_config_for_series_sides():
    s = _series(bubble_params())
    b = FitConfig.for_series(s, Orientation.BUBBLE)
    assert b.t_c_grid.values()[0] > s.t[-1]
    assert b.t_c_grid.values()[-1] <= s.t[-1] + 4.0 + 1e-9
    a = FitConfig.for_series(s, Orientation.ANTIBUBBLE)
    assert a.t_c_grid.values()[-1] < s.t[0]


def test_config_rejects_grid_inside_data():
    s = _series(bubble_params())
    with pytest.raises(UsageError):
        grid_fit(s, _cfg(t_c_grid=Grid(2006.5, 2008.0, 0.1)))
    with pytest.raises(UsageError):
        grid_fit(s, FitConfig(t_c_grid=Grid(2001.0, 2002.5, 0.1), orientation=Orientation.ANTIBUBBLE))
    with pytest.raises(UsageError):
        FitConfig(t_c_grid=TC_GRID, rise_fraction=1.0)


def test_fit_threads_env(monkeypatch):
    monkeypatch.setenv("LOGPERIOD_THREADS", "1")
    assert fit_threads(8) == 1
    monkeypatch.setenv("LOGPERIOD_THREADS", "x")
    with pytest.raises(UsageError):
        fit_threads(2)


# ---------------------------------------------------------------- linear sub-problem

@pytest.mark.parametrize("shape", list(Shape))
def test_linear_subfit_residual_orthogonal(shape):
    s = _series(bubble_params(shape=shape), noise=0.02, seed=4)
    lin = linear_subfit(s, 2007.6, 0.4, shape=shape, phi=2.0)
    X = _design(s.t, 2007.6, 0.4, shape, 2.0, 2.0, 0.3)
    y = s.v
    if shape is Shape.COSINE:
        # rebuild the linear coefficients of cos and sin from (C, phi)
        coef = [lin.A, lin.B, lin.C * math.cos(lin.phi), -lin.C * math.sin(lin.phi)]
    else:
        coef = [lin.A, lin.B, lin.C]
    r = y - X @ np.array(coef)
    assert float(r @ r) == pytest.approx(lin.rss, rel=1e-9)
    for j in range(X.shape[1]):
        col = X[:, j]
        assert abs(col @ r) <= 1e-8 * np.linalg.norm(col) * np.linalg.norm(y)


def test_linear_subfit_exact_and_cosine_phase():
    p = bubble_params(C=-0.08, phi=1.0)
    s = _series(p)
    lin = linear_subfit(s, p.t_c, p.alpha)
    # (C, phi) -> (-C, phi + pi) brings the amplitude positive
    assert lin.C == pytest.approx(0.08, rel=1e-9)
    assert lin.phi == pytest.approx(1.0 + math.pi, rel=1e-9)
    assert (lin.A, lin.B) == (pytest.approx(7.0, rel=1e-9), pytest.approx(-0.8, rel=1e-9))
    assert lin.rss < 1e-18


def test_linear_subfit_singular():
    s = _series(bubble_params())
    with pytest.raises(SingularFitError):
        linear_subfit(s, 2008.0, 0.0)
    with pytest.raises(DataError):
        linear_subfit(s, 2006.0, 0.5)


# ---------------------------------------------------------------- grid_fit

def _check_roundtrip(p, fit, phase_period=2 * math.pi):
    got = fit.params
    assert abs(got.t_c - p.t_c) / abs(p.t_c - T_END) < 1e-3
    for name in ("alpha", "A", "B"):
        assert getattr(got, name) == pytest.approx(getattr(p, name), rel=1e-3)
    C, phi = got.C, got.phi
    if np.sign(C) != np.sign(p.C) and p.shape is Shape.COSINE:
        C, phi = -C, phi + math.pi
    assert C == pytest.approx(p.C, rel=1e-3)
    d = (phi - p.phi + phase_period / 2) % phase_period - phase_period / 2
    assert abs(d) < 1e-3 * 2 * math.pi


@pytest.mark.parametrize("shape", list(Shape))
def test_noiseless_roundtrip(shape):
    p = bubble_params(shape=shape, t_c=2007.73, alpha=0.55, phi=2.2)
    fit = grid_fit(_series(p), _cfg(shape))
    # |cos| is unchanged by a phase shift of pi
    _check_roundtrip(p, fit, math.pi if shape is Shape.COSMOD else 2 * math.pi)
    assert fit.rss < 1e-12


def test_noiseless_roundtrip_antibubble():
    p = LpplParams(t_c=2001.4, alpha=0.35, A=3.0, B=0.9, C=0.1, phi=5.0, orientation=Orientation.ANTIBUBBLE)
    s = synth(p, 2002.0, 2007.0, 400)
    fit = grid_fit(s, FitConfig(t_c_grid=Grid(2000.0, 2001.98, 0.02), orientation=Orientation.ANTIBUBBLE))
    assert fit.params.t_c == pytest.approx(2001.4, abs=1e-6)
    assert fit.params.orientation is Orientation.ANTIBUBBLE


def test_result_fields_consistent():
    s = _series(bubble_params(), noise=0.01, seed=1)
    cfg = _cfg()
    fit = grid_fit(s, cfg)
    assert fit.rmse == pytest.approx(math.sqrt(fit.rss / fit.n_samples), rel=1e-15)
    assert fit.n_samples == len(s)
    assert fit.grid_evaluations == len(TC_GRID.values()) * 19
    assert len(fit.cost_profile) == len(TC_GRID.values())
    assert fit.target_transform is TransformState.LOG
    best = min(r for _, r in fit.cost_profile)
    assert fit.grid_best_rss == best
    assert fit.rss <= best


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(seed=st.integers(0, 10_000), shape=st.sampled_from(list(Shape)))
def test_refined_never_worse_than_grid(seed, shape):
    rng = np.random.default_rng(seed)
    p = bubble_params(shape=shape, t_c=T_END + rng.uniform(0.1, 1.2), alpha=rng.uniform(0.2, 0.8),
                      phi=rng.uniform(0, 2 * math.pi))
    s = _series(p, n=150, noise=0.02, seed=seed)
    fit = grid_fit(s, _cfg(shape, phi_grid=Grid(0, 2 * math.pi, 2 * math.pi / 8, periodic=True),
                           t_c_grid=Grid(T_END + 0.05, T_END + 1.5, 0.05)))
    assert fit.rss <= fit.grid_best_rss


def test_deterministic_bit_identical():
    s = _series(bubble_params(shape=Shape.SAW), noise=0.01, seed=9)
    cfg = _cfg(Shape.SAW)
    a, b = grid_fit(s, cfg), grid_fit(s, cfg)
    assert a == b
    c = grid_fit(s, FitConfig(**{**cfg.__dict__, "threads": 3}))
    assert c.to_dict() == a.to_dict()


@pytest.mark.parametrize("scale, shift", [(3.0, 0.0), (0.2, -5.0), (17.0, 100.0)])
def test_affine_equivariance(scale, shift):
    p = bubble_params()
    s = _series(p, noise=0.01, seed=3)
    cfg = _cfg()
    base = grid_fit(s, cfg).params
    moved = grid_fit(s.with_values(scale * s.v + shift), cfg).params
    tol = cfg.refine_tolerance * cfg.t_c_grid.step
    assert abs(moved.t_c - base.t_c) <= tol
    assert abs(moved.alpha - base.alpha) <= cfg.refine_tolerance * cfg.alpha_grid.step
    assert moved.A == pytest.approx(scale * base.A + shift, rel=1e-6)
    assert moved.B == pytest.approx(scale * base.B, rel=1e-6)
    assert moved.C == pytest.approx(scale * base.C, rel=1e-6)
    assert moved.phi == pytest.approx(base.phi, abs=1e-6)


def test_constant_series_is_fit_error():
    s = PriceSeries(np.linspace(2002, 2007, 50), np.full(50, 3.0), transform_state=TransformState.LOG)
    with pytest.raises(FitError):
        grid_fit(s, _cfg())


def test_all_nodes_singular():
    s = _series(bubble_params())
    with pytest.raises(SingularFitError):
        grid_fit(s, _cfg(alpha_grid=Grid(0.0, 0.0, 0.1)))


def test_too_few_samples():
    s = synth(bubble_params(), 2006.0, 2007.0, 4)
    with pytest.raises(DataError):
        grid_fit(s, _cfg())


def test_result_dict_roundtrip():
    s = _series(bubble_params(), noise=0.01, seed=1)
    fit = grid_fit(s, _cfg())
    d = fit.to_dict()
    assert set(d) == {"params", "rss", "rmse", "n_samples", "grid_evaluations", "target_transform",
                      "cost_profile"}
    back = FitResult.from_dict(d)
    assert back.params == fit.params and back.cost_profile == fit.cost_profile


# ---------------------------------------------------------------- cost profile

def test_profile_minimum_at_nearest_node():
    p = bubble_params(t_c=2007.611)
    s = _series(p)
    prof = cost_profile(s, _cfg())
    tcs = np.array([tc for tc, _ in prof])
    rss = np.array([r for _, r in prof])
    assert len(prof) == len(TC_GRID.values())
    assert tcs[np.argmin(rss)] == tcs[np.argmin(np.abs(tcs - p.t_c))]


def test_profile_flat_on_white_noise():
    t = np.linspace(2002.0, 2007.0, 500)
    flat = 0
    for seed in range(100):
        v = np.random.default_rng(seed).normal(0.0, 1.0, len(t))
        s = PriceSeries(t, v, transform_state=TransformState.LOG)
        r = np.array([x for _, x in cost_profile(s, FitConfig.for_series(s, horizon_years=2.0, step_days=10))])
        flat += (r.max() - r.min()) / r.min() < 0.05
    assert flat >= 80


# ---------------------------------------------------------------- synth

def test_synth_seeded():
    p = bubble_params()
    a = synth(p, 2002.0, 2007.0, 100, 0.01, seed=7)
    b = synth(p, 2002.0, 2007.0, 100, 0.01, seed=7)
    c = synth(p, 2002.0, 2007.0, 100, 0.01, seed=8)
    assert np.array_equal(a.v, b.v) and not np.array_equal(a.v, c.v)
    clean = synth_at(p, a.t)
    # Generator oracle: the same draw numpy makes for this seed
    assert np.allclose(a.v - clean.v, np.random.default_rng(7).normal(0, 0.01, 100), atol=1e-15)
    with pytest.raises(UsageError):
        synth(p, 2002.0, 2007.0, 3)
