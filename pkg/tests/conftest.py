import numpy as np
import pytest

from hubblering import presets
from hubblering.model import RampProfile


@pytest.fixture
def contraction():
    return presets.preset_profile("contraction", 38.2)


@pytest.fixture
def expansion():
    return RampProfile(presets.R_SMALL, presets.R_LARGE, 40.0, presets.RISE_10_90)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
