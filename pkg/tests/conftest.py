from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from katowave.grids import RadialGrid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def scatter_grid():
    return RadialGrid(2.0, 400)


@pytest.fixture(scope="session")
def small_grid():
    return RadialGrid(2.0, 100)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
