import numpy as np
import pytest

from fluidarray.geometry import Aperture

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def default_aperture():
    return Aperture(2.0, 2.0)


def random_points(rng, m, wx=2.0, wy=2.0):
    return np.column_stack([rng.uniform(0, wx, m), rng.uniform(0, wy, m)])
