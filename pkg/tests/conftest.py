import sys

import pytest

from blowlab.solver import RandomSmoothIC, SolverConfig, TaylorGreenIC, simulate
from blowlab.spectral import Grid, SpectralField


@pytest.fixture(scope="session")
def tg_run():
    """Taylor-Green, N = 32, nu = 0.1, dt = 0.01 to t = 1 with every step recorded."""
    cfg = SolverConfig(Grid(32), 0.1, 0.01, 1.0, 1, TaylorGreenIC(1.0))
    return simulate(cfg)


@pytest.fixture(scope="session")
def random_run():
    cfg = SolverConfig(Grid(16), 0.1, 0.002, 0.1, 5, RandomSmoothIC(3, 0.5))
    return simulate(cfg)


@pytest.fixture(scope="session")
def tg_refinement():
    """Taylor-Green at N = 32 and N = 64, nu = 0.05, to t = 1."""
    return [simulate(SolverConfig(Grid(n), 0.05, 0.005, 1.0, 4, TaylorGreenIC(1.0))) for n in (32, 64)]


def single_mode(grid, xi=(1, 0, 0), vec=(0, 1.0, 0)):
    return SpectralField.from_modes(grid, {xi: vec})


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
