import numpy as np
import pytest

from pdgeo import symcore


def random_spd(rng, n, radius=1.0, exact=False):
    """SPD matrix at distance ``radius`` (or uniformly up to it) from the identity."""
    s = symcore.sym(rng.standard_normal((n, n)))
    r = radius if exact else rng.uniform(0.0, radius)
    return symcore.spd_exp(s * (r / np.linalg.norm(s)))


def random_cloud(rng, count, n, radius):
    return np.array([random_spd(rng, n, radius) for _ in range(count)])


def random_det1(rng, radius=2.0):
    s = symcore.sym(rng.standard_normal((2, 2)))
    s = s - np.trace(s) / 2 * np.eye(2)
    return symcore.spd_exp(s * (rng.uniform(0, radius) / np.linalg.norm(s)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def cloud12():
    """12 points of PD(2) with pairwise distances below 1.5 (so d_X <= 1.5)."""
    return random_cloud(np.random.default_rng(7), 12, 2, 0.75)


@pytest.fixture(scope="session")
def hull12(cloud12):
    from pdgeo import build_eps_ball_hull

    return build_eps_ball_hull(cloud12, 0.1)
