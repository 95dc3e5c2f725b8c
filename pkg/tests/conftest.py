import numpy as np
import pytest

from solitonlab.field import Grid
from solitonlab.ground_state import analytic_sech, minimize
from solitonlab.physics import Nonlinearity


@pytest.fixture(scope="session")
def cubic():
    return Nonlinearity.focusing_power(2.0, 4.0)


@pytest.fixture(scope="session")
def ground_grid():
    return Grid((1024,), (25.0,))


@pytest.fixture(scope="session")
def sech_gs(ground_grid):
    return analytic_sech(ground_grid, np.sqrt(2.0))


@pytest.fixture(scope="session")
def cubic_gs(cubic, ground_grid):
    return minimize(cubic, ground_grid, np.sqrt(2.0))


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def emit(name, passed, detail):
        line = f"{name} {'PASS' if passed else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
