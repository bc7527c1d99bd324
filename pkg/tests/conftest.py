import numpy as np
import pytest

from fkwave.dispersion import Params
from fkwave.fields import Grid, solver_grid
from fkwave.waves import solve_stage2, stage1_for


@pytest.fixture(scope="session")
def coarse_grid():
    return Grid(64, 16)


@pytest.fixture(scope="session")
def fine_grid():
    return solver_grid()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def main_params():
    return Params.from_c2(0.9, epsilon=0.01)


@pytest.fixture(scope="session")
def main_stage1(main_params):
    return stage1_for(main_params)


@pytest.fixture(scope="session")
def main_wave(main_params):
    return solve_stage2(main_params)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = [mod.RESULTS[k] for k in sorted(mod.RESULTS)] if mod else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
