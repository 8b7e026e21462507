import numpy as np
import pytest

from fdaconc.operator_core import CovOperator, Grid


def random_psd(rng, d, rank=None, grid=None):
    grid = grid or Grid.uniform(d)
    a = rng.standard_normal((d, rank or d))
    return CovOperator.from_weighted(grid, a @ a.T / d)


def random_grid(rng, d):
    gaps = rng.uniform(0.2, 1.0, size=d - 1)
    return Grid.from_points(np.concatenate([[0.0], np.cumsum(gaps)]))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
