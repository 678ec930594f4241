import numpy as np
import pytest

from qcredit import available_backends
from qcredit.distributions import Asset, Portfolio, build_latent_grid


@pytest.fixture
def two_asset():
    return Portfolio([Asset(1, 0.15, 0.1), Asset(2, 0.25, 0.05)])


@pytest.fixture
def grid2():
    return build_latent_grid(2, 2.0)


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(n, rng):
    from qcredit.circuit import StateVector

    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))
