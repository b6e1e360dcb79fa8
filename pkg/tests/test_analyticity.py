import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from psnovikov import analyticity as an
from psnovikov import spectral as sp
from psnovikov.evolution import StepConfig, evolve, initial_data
from psnovikov.spectral import Field, GridSpec

L1_UNIT = 28 * math.sqrt(2) / 9
# -0.1 - (28 sqrt 2 / 9)(e^{0.72} - 1), evaluated in double precision
SIGMA_AT_001 = -4.7392694354508205
# -0.1 + L1 - L1 e^{7.2}
LOG_LB_AT_01 = -5888.894922279032


@pytest.fixture(scope="module")
def unit():
    return an.constants_from_norm(1.0, -0.1, 1.0)


@pytest.fixture(scope="module")
def short_run():
    g = GridSpec(40.0, 1024)
    u0 = initial_data("sech", g)
    states = evolve(u0, StepConfig(dt=1e-3, t_end=0.2), [0.0, 0.05, 0.1, 0.15, 0.2])
    return u0, states


@pytest.mark.parametrize("r0", [0.8, 0.4, 1.5])
def test_radius_of_synthetic_exponential(grid, r0):
    f = sp.inverse_transform(grid, np.exp(-r0 * np.abs(grid.xi)))
    est = an.radius_from_spectrum(f)
    assert est.r_measured == pytest.approx(r0, rel=0.01)
    assert est.fit_r2 > 0.999


def test_radius_of_sech(sech_field):
    est = an.radius_from_spectrum(sech_field)
    assert est.r_measured == pytest.approx(math.pi / 2, rel=0.05)


def test_radius_of_gaussian_hits_floor(grid):
    est = an.radius_from_spectrum(Field.from_function(grid, lambda x: np.exp(-x ** 2)))
    assert est.floor_hit


def test_radius_needs_modes(grid):
    with pytest.raises(an.InsufficientBandError):
        an.radius_from_spectrum(Field(grid, np.zeros(grid.N)))
    with pytest.raises(an.InsufficientBandError):
        an.radius_from_spectrum(Field.from_function(grid, lambda x: np.cos(np.pi * x / 40)))


def test_unit_constants(unit):
    assert unit.K == 144
    assert unit.B == unit.L2 == 72
    assert unit.A == pytest.approx(L1_UNIT, rel=1e-15)
    assert unit.L1 == pytest.approx(L1_UNIT, rel=1e-15)
    assert unit.L1 == pytest.approx(4.3998, abs=1e-4)


def test_constants_scale_with_norm(unit):
    two = an.constants_from_norm(2.0, -0.1, 1.0)
    assert two.A == pytest.approx(2 * unit.A) and two.L1 == pytest.approx(2 * unit.L1)
    assert two.B == unit.B


@given(mu=st.floats(1.0, 100.0), norm=st.floats(1e-3, 1e3))
def test_a_never_exceeds_l1(mu, norm):
    c = an.constants_from_norm(norm, -0.1, mu)
    assert c.A <= c.L1 * (1 + 1e-15)


def test_constants_validation(sech_field):
    with pytest.raises(ValueError):
        an.bound_constants(sech_field, 0.1)
    with pytest.raises(ValueError):
        an.constants_from_norm(1.0, -0.1, 0.5)


def test_sigma_curve(unit):
    assert an.sigma_of_t(unit, 0.0) == -0.1
    ts = np.linspace(0, 0.1, 100)
    assert np.all(np.diff(an.sigma_of_t(unit, ts)) < 0)
    assert float(an.sigma_of_t(unit, 0.01)) == pytest.approx(SIGMA_AT_001, rel=1e-14)


def test_rho_curve(unit):
    assert float(an.rho_of_t(unit, 0.0)) == 0.5
    r1, r2 = an.rho_of_t(unit, 0.01), an.rho_of_t(unit, 0.03)
    assert r2 / r1 == pytest.approx(math.exp(144 * 0.02), rel=1e-12)
    assert float(an.log_rho_of_t(unit, 0.03)) == pytest.approx(math.log(float(r2)), rel=1e-14)


def test_lower_bound(unit):
    v, lg = an.lower_bound_r(unit, 0.0)
    assert v == pytest.approx(math.exp(-0.1), rel=1e-14)
    assert float(an.log_lower_bound_r(unit, 0.1)) == pytest.approx(LOG_LB_AT_01, rel=1e-14)
    ts = np.linspace(0, 1, 200)
    # A = L1 and B = L2 at mu = 1, so the two curves coincide up to rounding
    sig, lb = an.sigma_of_t(unit, ts), an.log_lower_bound_r(unit, ts)
    assert np.all(sig >= lb - 1e-13 * np.abs(lb))
    c3 = an.constants_from_norm(1.0, -0.1, 3.0)
    assert np.all(an.sigma_of_t(c3, ts[1:]) > an.log_lower_bound_r(c3, ts[1:]))
    v, lg = an.lower_bound_r(unit, 1.0)
    assert v == 0.0 and np.isfinite(lg)


def test_track_short_run(short_run):
    u0, states = short_run
    mu = an.mu_from_states(states)
    assert mu == 1 + max(s.diag.u_h2 for s in states)
    c = an.bound_constants(u0, -0.1, mu)
    rows = an.track(states, c)
    assert rows[0].r_measured == pytest.approx(math.pi / 2, rel=0.05)
    assert all(r.passed for r in rows)
    assert all(r.r_measured < rows[0].r_measured for r in rows[1:])


def test_kato_masuda_conclusion(short_run):
    u0, states = short_run
    c = an.bound_constants(u0, -0.1, an.mu_from_states(states))
    for s in states[1:]:
        lphi, lrho = an.kato_masuda_check(c, s.t, s.u)
        assert lphi <= lrho
    lphi, lrho = an.kato_masuda_check(c, 0.0, u0)
    assert lphi == pytest.approx(lrho, rel=1e-12)
