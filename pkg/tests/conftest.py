import numpy as np
import pytest

from statedet import RandomSource

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return RandomSource(20240601).generator()


@pytest.fixture
def acceptance_report():
    """Collects one PASS/FAIL line per acceptance criterion; printed at the end
    of the session."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def haar_states(gen, dim, count):
    z = gen.standard_normal((count, dim)) + 1j * gen.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
