import numpy as np
import pytest

from phaseest.model import nominal

# Lines recorded by test_acceptance.py, echoed after the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def params():
    return nominal()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
