import numpy as np
import pytest

import semc


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running end-to-end checks")


@pytest.fixture(scope="session")
def bimodal():
    return semc.make_bimodal()


@pytest.fixture(scope="session")
def desk_exhaustive():
    return semc.make_exhaustive(semc.DESK_EXHAUSTIVE)


@pytest.fixture(scope="session")
def spectral_k3():
    return semc.make_spectral(semc.SpectralSpec())


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def flat_box(dim=2, n_data=10.0):
    """Zero energy everywhere on the unit box."""
    return semc.make_quadratic(np.zeros(dim), np.full(dim, 0.5),
                               [[0.0, 1.0]] * dim, n_data, label="flat")


def gaussian_well(weight=1.0, n_data=1.0, dim=1, center=0.5, lo=0.0, hi=1.0):
    return semc.make_quadratic(np.full(dim, weight), np.full(dim, center),
                               [[lo, hi]] * dim, n_data, label="gauss")
