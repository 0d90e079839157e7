import numpy as np
import pytest

from stableplace import fixtures
from stableplace.rotations import fit_geodesic_polynomial, random_rotation


@pytest.fixture(scope="session")
def poly():
    return fit_geodesic_polynomial()


@pytest.fixture(scope="session")
def cube():
    return fixtures.unit_cube()


@pytest.fixture(scope="session")
def tetra():
    return fixtures.regular_tetrahedron()


def random_rotations(seed, n):
    rng = np.random.default_rng(seed)
    return [random_rotation(rng) for _ in range(n)]
