import numpy as np
import pytest

from toral_rigidity.exact_linear_algebra import ToralMatrix
from toral_rigidity.intpoly import IntPolynomial

CAT = ((2, 1), (1, 1))


def companion_of(*coeffs_low_first) -> ToralMatrix:
    return ToralMatrix.companion(IntPolynomial(tuple(coeffs_low_first)))


@pytest.fixture
def cat():
    return ToralMatrix(CAT)


@pytest.fixture
def cubic():
    """Companion of x^3 - 3x - 1 (totally real, unit rank 2)."""
    return companion_of(-1, -3, 0, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
