import numpy as np
import pytest

from cdmacompute.function_space import TruthTable
from cdmacompute.gf2 import BitMatrix

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def H1():
    """The two-row, three-user signature matrix of the worked example."""
    return BitMatrix.from_rows([[1, 1, 0], [1, 0, 1]])


@pytest.fixture
def f_sim():
    """not(o1) o2 o3 + o1 not(o2) not(o3)."""
    return TruthTable.from_callable(3, lambda a, b, c: ((1 - a) * b * c + a * (1 - b) * (1 - c)) % 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
