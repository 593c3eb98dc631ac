import numpy as np
import pytest

from hypclif.poly import parse_poly

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def lorentz():
    return parse_poly("x1^2 - x2^2 - x3^2", 3), np.array([1.0, 0.0, 0.0])


@pytest.fixture
def hyp2():
    return parse_poly("x1^2 - x2^2", 2), np.array([1.0, 0.0])


@pytest.fixture
def cube():
    return parse_poly("x1*x2*x3", 3), np.array([1.0, 1.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(42)
