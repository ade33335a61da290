import numpy as np
import pytest

from multiphoton.model import canonical_system, ladder


@pytest.fixture(scope="session")
def system():
    return canonical_system()


@pytest.fixture(scope="session")
def two_level():
    return ladder((0.0, 2.61), (0.0,))


def rel(a, b):
    return abs(a - b) / abs(b)


def phase_free_distance(a, b):
    """Distance between state vectors up to a global phase."""
    ov = np.vdot(a, b)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(a * ph - b)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import pytest_terminal_summary_lines
    except ImportError:
        return
    lines = pytest_terminal_summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
