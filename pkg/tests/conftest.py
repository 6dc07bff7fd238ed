import numpy as np
import pytest

from ncusp.geometry import cusp_map, validate_params

# the three reference configurations used throughout
P1 = dict(n=2, gamma=3.0, p=1.5)
P2 = dict(n=3, gamma=4.0, p=2.0)


@pytest.fixture(scope="session")
def p1_params():
    return validate_params(q=2.0, usage="steklov", **P1)


@pytest.fixture(scope="session")
def p1_trace():
    return validate_params(q=3.0, usage="trace", **P1)


@pytest.fixture(scope="session")
def p2_params():
    return validate_params(q=3.0, usage="steklov", **P2)


@pytest.fixture(scope="session")
def simplex_params():
    return validate_params(2, 2.0, 1.5, 2.0, simplex=True, usage="steklov")


@pytest.fixture(scope="session")
def simplex3_params():
    return validate_params(3, 3.0, 2.0, 2.5, simplex=True, usage="steklov")


@pytest.fixture(scope="session")
def p1_map(p1_params):
    return cusp_map(p1_params)


@pytest.fixture(scope="session")
def p2_map(p2_params):
    return cusp_map(p2_params)


@pytest.fixture(scope="session")
def simplex_map(simplex_params):
    return cusp_map(simplex_params)


@pytest.fixture(scope="session")
def p1_mesh(p1_params):
    from ncusp.steklov.mesh import generate_cusp_mesh
    return generate_cusp_mesh(p1_params, levels=6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
