import numpy as np
import pytest

from decmaxwell.complex import make_circle, make_icosphere, make_torus_lattice
from decmaxwell.hodge import build_caches, coulomb_projector
from decmaxwell.rng import generator


@pytest.fixture(scope="session")
def torus():
    return make_torus_lattice(4, 4, 1.0, 1.0)


@pytest.fixture(scope="session")
def sphere():
    return make_icosphere(1, 1.0)


@pytest.fixture(scope="session")
def circle():
    return make_circle(16, 2 * np.pi)


@pytest.fixture(scope="session")
def torus_caches(torus):
    return build_caches(torus)


@pytest.fixture(scope="session")
def sphere_caches(sphere):
    return build_caches(sphere)


@pytest.fixture(scope="session")
def circle_caches(circle):
    return build_caches(circle)


@pytest.fixture(scope="session")
def torus_Pi(torus_caches):
    return coulomb_projector(torus_caches[0], torus_caches[1])


@pytest.fixture(scope="session")
def sphere_Pi(sphere_caches):
    return coulomb_projector(sphere_caches[0], sphere_caches[1])


@pytest.fixture(params=["torus", "sphere"])
def surface(request):
    """(mesh, caches, Pi) for each shipped closed surface."""
    mesh = request.getfixturevalue(request.param)
    caches = request.getfixturevalue(f"{request.param}_caches")
    Pi = request.getfixturevalue(f"{request.param}_Pi")
    return mesh, caches, Pi


@pytest.fixture
def rng(request):
    # one stream per test, replayable
    return generator(1234, request.node.nodeid)
