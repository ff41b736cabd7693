import math

import numpy as np
import pytest

from fracvar.grid import GridSpec, make_bump, make_gaussian_cutoff

# lines reported by the acceptance suite, printed at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def gauss1d():
    return make_gaussian_cutoff(GridSpec.from_spacing(1, 16.0, 1 / 32), 1.0, 8.0)


@pytest.fixture(scope="session")
def bump1d():
    return make_bump(GridSpec(1, 2.0, 129), 0.0, 1.0)


@pytest.fixture(scope="session")
def bump2d():
    return make_bump(GridSpec(2, 2.0, 65), (0.0, 0.0), 1.0)


def bump1(x):
    return math.exp(1 - 1 / (1 - x * x)) if abs(x) < 1 else 0.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
