import numpy as np
import pytest

from splinemetric.spline import (
    build_grid,
    init_identity,
    init_random,
    make_curve,
)


@pytest.fixture(scope="session")
def default_grid():
    return build_grid(3, 10, (-15.0, 15.0))


@pytest.fixture(scope="session")
def identity_curve(default_grid):
    return make_curve(default_grid, init_identity(default_grid))


@pytest.fixture(scope="session")
def random_curve(default_grid):
    return make_curve(default_grid, init_random(default_grid, 7))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
