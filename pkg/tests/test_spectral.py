import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from psnovikov import spectral as sp
from psnovikov.corpus import random_band_limited
from psnovikov.spectral import Field, GridSpec

from conftest import mode, sech


def test_transform_of_zero(grid):
    assert np.all(sp.transform(Field(grid, np.zeros(grid.N))) == 0)


def test_transform_single_mode(grid):
    f, _ = mode(grid, 1)
    c = sp.transform(f)
    support = np.nonzero(np.abs(c) > 1e-12)[0]
    assert sorted(grid.k[support]) == [-1, 1]
    assert c[grid.k == 1][0] == pytest.approx(c[grid.k == -1][0], abs=1e-14)


def test_transform_sech_matches_closed_form(sech_field, grid):
    # line transform of sech is sqrt(pi/2) sech(pi xi / 2)
    c = sp.transform(sech_field)
    sel = np.abs(grid.xi) <= 10
    exact = math.sqrt(math.pi / 2) * sech(np.pi * grid.xi[sel] / 2)
    assert np.max(np.abs(c[sel] - exact)) <= 1e-8


def test_inverse_transform_roundtrip(sech_field):
    back = sp.inverse_transform(sech_field.grid, sp.transform(sech_field))
    assert np.max(np.abs(back.samples - sech_field.samples)) < 1e-14


def test_derivative_of_constant(grid):
    assert np.max(np.abs(sp.derivative(Field(grid, np.full(grid.N, 3.0)), 1).samples)) < 1e-13


def test_second_derivative_eigenfunction(grid):
    f, xi = mode(grid, 1, "sin")
    d2 = sp.derivative(f, 2)
    assert np.max(np.abs(d2.samples + xi ** 2 * f.samples)) <= 1e-12


def test_derivative_sech(sech_field, grid):
    x = grid.x
    exact = -sech(x) * np.tanh(x)
    assert np.max(np.abs(sp.derivative(sech_field, 1).samples - exact)) <= 1e-9


def test_derivative_order_limits(sech_field):
    with pytest.raises(sp.UnsupportedOrderError):
        sp.derivative(sech_field, -1)
    with pytest.raises(sp.UnsupportedOrderError):
        sp.derivative(sech_field, sp.MAX_DERIVATIVE_ORDER + 1)


def test_helmholtz_single_mode(grid):
    f, xi = mode(grid, 1)
    out = sp.helmholtz_inverse(f)
    assert np.max(np.abs(out.samples - f.samples / (1 + xi ** 2))) < 1e-14


def test_helmholtz_of_momentum_of_sech(grid):
    # (1 - d^2) sech = 2 sech^3
    m = Field.from_function(grid, lambda x: 2 * sech(x) ** 3)
    assert np.max(np.abs(sp.helmholtz_inverse(m).samples - sech(grid.x))) <= 1e-8


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_helmholtz_inverse_property(seed, grid):
    f = random_band_limited(grid, np.random.default_rng(seed))
    g = sp.helmholtz_inverse(f)
    back = Field(grid, g.samples - sp.derivative(g, 2).samples)
    assert np.max(np.abs(back.samples - f.samples)) <= 1e-10


def test_product_with_zero_and_one(grid):
    f = random_band_limited(grid, np.random.default_rng(1), k_max=grid.N // 3 - 1)
    zero = Field(grid, np.zeros(grid.N))
    one = Field(grid, np.ones(grid.N))
    assert np.all(sp.product(f, zero).samples == 0)
    assert np.max(np.abs(sp.product(f, one).samples - f.samples)) < 1e-14
    g = Field.from_function(grid, lambda x: np.sign(x))
    assert np.max(np.abs(sp.product(g, one).samples - sp.dealias(g).samples)) < 1e-14


def test_product_sech_squared(sech_field, grid):
    assert np.max(np.abs(sp.product(sech_field, sech_field).samples - sech(grid.x) ** 2)) <= 1e-10


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_product_is_exact_for_band_limited(seed, grid):
    rng = np.random.default_rng(seed)
    f = random_band_limited(grid, rng)
    g = random_band_limited(grid, rng)
    assert np.max(np.abs(sp.product(f, g).samples - f.samples * g.samples)) < 1e-13


def test_product_grid_mismatch(sech_field):
    other = Field.from_function(GridSpec(40.0, 512), sech)
    with pytest.raises(sp.GridMismatchError):
        sp.product(sech_field, other)


def test_integrate(grid, sech_field):
    assert sp.integrate(Field(grid, np.zeros(grid.N))) == 0
    assert sp.integrate(sech_field) == pytest.approx(math.pi, abs=1e-10)
    assert sp.integrate(Field.from_function(grid, lambda x: 2 * sech(x) ** 3)) == pytest.approx(math.pi, abs=1e-10)


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_parseval(seed, grid):
    # h sum f^2 = 2L sum |c_k|^2
    f = random_band_limited(grid, np.random.default_rng(seed))
    lhs = grid.h * np.sum(f.samples ** 2)
    rhs = 2 * grid.half_width * np.sum(np.abs(f.coefficients) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_energy_tail(grid, sech_field):
    assert sp.energy_tail(sech_field) < 1e-20
    noisy = Field(grid, np.random.default_rng(0).standard_normal(grid.N))
    assert sp.energy_tail(noisy) > 0.3


def test_nonfinite_rejected(grid):
    x = np.zeros(grid.N)
    x[3] = np.nan
    with pytest.raises(sp.InvalidFieldError):
        Field(grid, x)


def test_domain_warning(caplog):
    wide = Field.from_function(GridSpec(10.0, 256), lambda x: sech(x / 4))
    assert not sp.check_domain(wide)
    assert "outside" in caplog.text


def test_csv_roundtrip(tmp_path, sech_field):
    p = tmp_path / "u.csv"
    sp.write_samples_csv(sech_field, p)
    back = sp.read_samples_csv(p)
    assert back.grid == sech_field.grid
    assert np.array_equal(back.samples, sech_field.samples)
    q = tmp_path / "c.csv"
    sp.write_spectrum_csv(sech_field, q)
    back = sp.read_spectrum_csv(q, sech_field.grid.half_width)
    assert np.max(np.abs(back.samples - sech_field.samples)) < 1e-15
