import numpy as np
import pytest

from boojum_ldg.mesh import build_ball_mesh
from boojum_ldg.qtensor import MaterialParams
from boojum_ldg.solve import SolveConfig, init_polar_tangent_field, minimize_harmonic, sweep_L

SCHEDULE = (0.5, 0.25, 0.125, 0.0625)
SWEEP_CFG = SolveConfig(grad_tol=1e-6)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical runs")


@pytest.fixture(scope="session")
def mesh1():
    return build_ball_mesh(1, 3)


@pytest.fixture(scope="session")
def mesh2():
    return build_ball_mesh(2, 6)


@pytest.fixture(scope="session")
def mesh3():
    return build_ball_mesh(3, 12)


@pytest.fixture(scope="session")
def mesh4():
    return build_ball_mesh(4, 24)


@pytest.fixture(scope="session")
def harmonic3(mesh3):
    return minimize_harmonic(init_polar_tangent_field(mesh3), mesh3)


@pytest.fixture(scope="session")
def harmonic4(mesh4):
    return minimize_harmonic(init_polar_tangent_field(mesh4), mesh4)


@pytest.fixture(scope="session")
def sweep3(mesh3, harmonic3):
    return sweep_L(SCHEDULE, mesh3, MaterialParams(), harmonic3[0], SWEEP_CFG)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
