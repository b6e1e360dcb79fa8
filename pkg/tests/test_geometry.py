import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from psnovikov import geometry as geo
from psnovikov.corpus import random_band_limited
from psnovikov.evolution import StepConfig, evolve, initial_data
from psnovikov.geometry import PSSParams
from psnovikov.spectral import Field, GridSpec

from conftest import sech

P0 = PSSParams(0.0, -2, 1)
params = st.builds(PSSParams, st.floats(-3, 3), st.sampled_from([-2, 1]), st.sampled_from([-1, 1]))


def sech_jet(x):
    s, t = sech(x), np.tanh(x)
    return s, -s * t, s * (t ** 2 - s ** 2)


def zero(grid):
    return Field(grid, np.zeros(grid.N))


def test_psi(grid, sech_field):
    assert np.all(geo.psi(zero(grid), P0).samples == 0)
    c = 0.7
    assert np.max(np.abs(geo.psi(Field(grid, np.full(grid.N, c)), P0).samples + 2 * c * c)) < 1e-14
    u, ux, _ = sech_jet(grid.x)
    expect = -2 * u * ux - 2 * ux ** 2 - 2 * u ** 2
    assert np.max(np.abs(geo.psi(sech_field, P0).samples - expect)) <= 1e-10


@pytest.mark.parametrize("p", [PSSParams(0.0, -2, 1), PSSParams(0.7, 1, -1), PSSParams(-1.3, -2, -1)])
def test_forms_of_zero(grid, p):
    f = geo.one_forms(zero(grid), p)
    assert np.all(f.f11 == 0)
    assert np.allclose(f.f21, p.sign * p.m1 * math.sqrt(1 + p.mu_metric ** 2), rtol=0, atol=1e-15)
    assert np.allclose(f.f31, p.m1 * p.mu_metric, rtol=0, atol=1e-15)
    assert all(np.all(a == 0) for a in (f.f12, f.f22, f.f32))


def test_forms_specialization(sech_field):
    f = geo.one_forms(sech_field, PSSParams(0.0, 1, 1))
    assert np.all(f.f21 == 1.0)
    assert np.array_equal(f.f31, f.m)
    assert np.all(f.f22 == 0)


def test_forms_of_sech_against_expansion(grid, sech_field):
    p = PSSParams(0.6, -2, 1)
    u, ux, uxx = sech_jet(grid.x)
    m = u - uxx
    P = 2 * u * m + 4 * u * ux / p.m1 - 2 * ux ** 2 - 2 * u ** 2
    r = math.sqrt(1 + 0.36)
    f = geo.one_forms(sech_field, p)
    expect = dict(f11=m, f12=P, f21=0.6 * m + p.m1 * r, f22=0.6 * P, f31=r * m + p.m1 * 0.6, f32=r * P)
    for k, v in expect.items():
        assert np.max(np.abs(getattr(f, k) - v)) <= 1e-9, k


def test_metric_of_zero(grid):
    p = PSSParams(0.5, -2, 1)
    ms = geo.metric(geo.one_forms(zero(grid), p), p)
    assert np.allclose(ms.E, 4 * 1.25, rtol=1e-15)
    assert np.all(ms.F == 0) and np.all(ms.G == 0) and np.all(ms.genericity == 0)


@given(seed=st.integers(0, 2 ** 32 - 1), p=params)
def test_metric_definition(seed, p, grid):
    u = random_band_limited(grid, np.random.default_rng(seed))
    f = geo.one_forms(u, p)
    ms = geo.metric(f, p)
    assert np.max(np.abs(ms.E - (f.f11 ** 2 + f.f21 ** 2))) == 0
    # omega_1 ^ omega_2 = -s m1 sqrt(1+mu^2) P dx ^ dt
    gen = geo.genericity_indicator(f)
    assert np.max(np.abs(gen + p.sign * p.m1 * p.root * f.P)) <= 1e-12 * max(1.0, np.max(np.abs(f.P)))
    pair = geo.akns_matrices(f)
    assert np.max(np.abs(np.trace(pair.X, axis1=1, axis2=2))) == 0
    assert np.max(np.abs(np.trace(pair.T, axis1=1, axis2=2))) == 0
    assert np.array_equal(pair.X[:, 0, 1], 0.5 * (f.f11 - f.f31))
    assert np.array_equal(pair.T[:, 1, 0], 0.5 * (f.f12 + f.f32))
    assert np.array_equal(pair.X[:, 0, 0], 0.5 * f.f21)


def test_metric_G_of_sech(grid, sech_field):
    u, ux, uxx = sech_jet(grid.x)
    m = u - uxx
    P = 2 * u * m - 2 * u * ux - 2 * ux ** 2 - 2 * u ** 2
    ms = geo.metric(geo.one_forms(sech_field, P0), P0)
    assert np.max(np.abs(ms.G - P ** 2)) <= 1e-9


def test_sech_genericity_support(grid, sech_field):
    gen = geo.genericity_indicator(geo.one_forms(sech_field, P0))
    inner = np.abs(grid.x) <= 0.3
    assert np.min(np.abs(gen[inner])) > 0.5 * np.max(np.abs(gen))


def test_akns_of_zero(grid):
    pair = geo.akns_matrices(geo.one_forms(zero(grid), P0))
    assert np.all(pair.T == 0)
    assert np.all(pair.X == pair.X[0])


def test_zero_curvature_trivial(grid):
    assert geo.zero_curvature_residual(zero(grid), P0) == 0
    assert geo.zero_curvature_residual(Field(grid, np.full(grid.N, 0.9)), P0) <= 1e-12
    with pytest.raises(geo.GeometryError):
        geo.zero_curvature_residual(zero(grid), PSSParams(0.0, 1, 1))


def test_zero_curvature_sech_refinement():
    vals = []
    for N in (1024, 2048):
        u0 = initial_data("sech", GridSpec(40.0, N))
        u = evolve(u0, StepConfig(dt=1e-3, t_end=0.1))[-1].u
        vals.append(geo.zero_curvature_residual(u, P0))
    assert vals[0] <= 1e-6
    assert vals[1] < vals[0]


def test_zero_curvature_sech_initial(sech_field):
    assert geo.zero_curvature_residual(sech_field, PSSParams(0.8, -2, -1)) <= 1e-6


def test_brioschi_pseudosphere():
    x = np.linspace(-2, 2, 50)
    one, nil, G = np.ones_like(x), np.zeros_like(x), np.exp(2 * x)
    K = geo.brioschi(one, nil, G, nil, nil, nil, nil, nil, nil, 2 * G, nil, 4 * G)
    assert np.max(np.abs(K + 1)) < 1e-14


def test_brioschi_sphere():
    x = np.linspace(0.2, 2.9, 50)
    s, c = np.sin(x), np.cos(x)
    one, nil = np.ones_like(x), np.zeros_like(x)
    K = geo.brioschi(one, nil, s * s, nil, nil, nil, nil, nil, nil, 2 * s * c, nil, 2 * (c * c - s * s))
    assert np.max(np.abs(K - 1)) < 1e-13


def _series(N, t_end, dt=1e-3):
    g = GridSpec(40.0, N)
    u0 = initial_data("sech", g)
    n = int(round(t_end / dt))
    states = evolve(u0, StepConfig(dt=dt, t_end=t_end), [i * dt for i in range(n + 1)])
    return [geo.metric(geo.one_forms(s.u, P0), P0, s.t) for s in states]


@pytest.fixture(scope="module")
def slab():
    # 21 samples at spacing 1e-3 from t = 0
    return _series(1024, 0.02)


def test_curvature_on_well_conditioned_points(slab):
    out = geo.gaussian_curvature(slab, 1e-3, rel_threshold=1e-2)
    assert len(out) == len(slab) - 4
    assert all(s.n_eval > 0 for s in out)
    assert max(s.max_abs_K_plus_1 for s in out) <= 1e-2


def test_curvature_threshold_sweep(slab):
    worst = [max(s.max_abs_K_plus_1 for s in geo.gaussian_curvature(slab, 1e-3, rel_threshold=r))
             for r in (1e-2, 1e-4, 1e-6)]
    assert worst[0] <= worst[1] <= worst[2]


def test_curvature_methods_agree_where_conditioned(slab):
    a = geo.gaussian_curvature(slab, 1e-3, rel_threshold=1e-1)
    b = geo.gaussian_curvature(slab, 1e-3, rel_threshold=1e-1, method="metric")
    for sa, sb in zip(a, b):
        assert np.max(np.abs(sa.K[sa.mask] - sb.K[sb.mask])) < 1e-3


def test_curvature_errors(grid, slab):
    with pytest.raises(geo.GeometryError):
        geo.gaussian_curvature(slab[:4], 1e-3)
    flat = [geo.metric(geo.one_forms(zero(grid), P0), P0, 0.001 * i) for i in range(5)]
    with pytest.raises(geo.NoEvaluationPointsError):
        geo.gaussian_curvature(flat, 1e-3)
    with pytest.raises(ValueError):
        geo.gaussian_curvature(slab, 1e-3, method="nope")


def _scale(j, p):
    m = j.u - j.uxx
    return abs(p.m1) * p.root * max(np.max(np.abs(2 * j.u * m)), np.max(np.abs(geo._psi_arrays(j.u, j.ux, p.m1))))


def test_nongeneric_constant():
    j = geo.nongeneric_reference("sqrt_exp_m2", a=0.0, b=1.0)
    assert np.all(j.u == 1.0) and np.all(j.ux == 0) and np.all(j.uxx == 0)


@pytest.mark.parametrize("kind,m1", [("sqrt_exp_m2", -2), ("sqrt_exp_p1", 1), ("f_exp", 1)])
def test_nongeneric_families(kind, m1):
    p = PSSParams(0.0, m1, 1)
    j = geo.nongeneric_reference(kind, a=1.0, b=1.0, window=(0.0, 5.0))
    gen = geo.genericity_indicator(geo.forms_from_jet(j, p))
    assert np.max(np.abs(gen)) <= 1e-9 * _scale(j, p)


def test_nongeneric_bad_input():
    with pytest.raises(ValueError):
        geo.nongeneric_reference("nope")
    with pytest.raises(geo.GeometryError):
        geo.nongeneric_reference("sqrt_exp_m2", a=-1.0, b=0.5)


def test_params_validation():
    with pytest.raises(ValueError):
        PSSParams(0.0, 2, 1)
    with pytest.raises(ValueError):
        PSSParams(0.0, -2, 0)
