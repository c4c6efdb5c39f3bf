import sys

import numpy as np
import pytest

from swesplit import (
    PhysParams,
    StageConfig,
    build_grid,
    from_primitives,
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_grid():
    return build_grid(0.0, 0.0, 1.0, 1.0, 10, 10)


@pytest.fixture
def frictionless():
    return PhysParams(g=10.0, n_manning=0.0, h_eps=1e-6)


@pytest.fixture
def stage_cfg():
    return StageConfig(picard_max_iters=200)


def lake_state(grid, depth=0.3):
    """Constant-depth quiescent state on the whole grid."""
    h = np.full(grid.shape, depth)
    z = np.zeros(grid.shape)
    return from_primitives(grid, h, z, z, t=0.0)


def constant_bc(depth=0.3, u=0.0, v=0.0):
    def bc(x, y, t):
        shape = np.shape(x)
        return (np.full(shape, depth), np.full(shape, u), np.full(shape, v))
    return bc


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # echo the one-line acceptance verdicts where they are easy to find
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERION_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
