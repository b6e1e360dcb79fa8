import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from psnovikov.spectral import Field, GridSpec

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def sech(x):
    # np.cosh overflows past |x| ~ 710; the result is 0 there anyway
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(x)


@pytest.fixture(scope="session")
def grid():
    return GridSpec(40.0, 1024)


@pytest.fixture(scope="session")
def sech_field(grid):
    return Field.from_function(grid, sech)


def mode(grid, k=1, kind="cos"):
    xi = np.pi * k / grid.half_width
    f = np.cos if kind == "cos" else np.sin
    return Field.from_function(grid, lambda x: f(xi * x)), xi
