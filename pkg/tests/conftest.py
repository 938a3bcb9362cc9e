import numpy as np
import pytest

THETA = np.array([1.30, 0.28, 0.32, 0.40, 1.40])
G = 9.81


@pytest.fixture
def theta():
    return THETA.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


ACCEPTANCE = {}


def record_acceptance(result):
    ACCEPTANCE[result.key] = result


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        terminalreporter.write_line(ACCEPTANCE[key].line())
