import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wavegesture.geometry import MeasurementGrid, PolycubeShape, build_dictionary

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid():
    return MeasurementGrid()


@pytest.fixture(scope="session")
def dictionary():
    return build_dictionary()


@pytest.fixture(scope="session")
def unit_cube():
    return PolycubeShape(((0, 0, 0),), id=0, name="cube")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
