import numpy as np
import pytest

from confocal_instanton.confocal import EllipsoidalPoint, FocalTriple

SQRT20 = np.sqrt(20.0)


@pytest.fixture
def f():
    return FocalTriple(0.0, 1.0, 4.0)


@pytest.fixture
def worked():
    """(lam, mu, nu) = (5, 2, 0.5) in the positive octant."""
    return EllipsoidalPoint(5.0, 2.0, 0.5)


@pytest.fixture
def worked_xyz():
    return np.sqrt([1.25, 2.0 / 3.0, 7.0 / 12.0])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
