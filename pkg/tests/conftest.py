import numpy as np
import pytest

from markovroots.markov import P_FIVE_STATE, P_THREE_STATE

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def P3():
    return P_THREE_STATE.entries


@pytest.fixture
def P5():
    return P_FIVE_STATE.entries


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
