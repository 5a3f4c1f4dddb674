"""Shared fixtures: a few propagated states are expensive enough to cache."""

import math
import sys

import numpy as np
import pytest

from pilotlab.dynamics import DoubleSlitConfig, WavefunctionHistory
from pilotlab.grid import FreePotential, Grid, make_gaussian_packet


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance pass/fail lines, which capture would otherwise hide."""
    module = sys.modules.get("test_acceptance")
    REPORT_LINES = getattr(module, "REPORT_LINES", None)
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in REPORT_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def drift_history():
    """1D free Gaussian (center -1, width 2, k 1) evolved to t=2, psi kept."""
    grid = Grid.regular((-30.0, 30.0), 1024)
    wf = make_gaussian_packet(grid, -1.0, 2.0, 1.0)
    return WavefunctionHistory.evolve(wf, FreePotential(), 2.0, 0.05, keep_psi=True)


@pytest.fixture(scope="session")
def slit_config():
    return DoubleSlitConfig(n=400, seed=3)


@pytest.fixture(scope="session")
def slit_history(slit_config):
    return slit_config.history()
