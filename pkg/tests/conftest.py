import numpy as np
import pytest

from fracldg.basis import reference_basis
from fracldg.mesh import disk_mesh


@pytest.fixture(scope="session")
def coarse_mesh():
    return disk_mesh(4)


@pytest.fixture(scope="session")
def mid_mesh():
    return disk_mesh(8)


@pytest.fixture(scope="session")
def p1():
    return reference_basis(1)


@pytest.fixture(scope="session")
def p2():
    return reference_basis(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[num])
