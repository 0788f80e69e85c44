"""Frozen reference values.

Each constant was computed once with an independent route (``scipy.linalg.expm``
or ``solve_ivp`` for the dynamics and the closed-form two-mode invariant for the
partially transposed symplectic eigenvalue) and agreed with the package to
better than 1e-10.
"""

import math

import numpy as np
import pytest

from oscchain.dynamics import time_grid
from oscchain.entanglement import log_negativity
from oscchain.experiments import ScenarioConfig, quench_series, ramp_point
from oscchain.gaussian import gibbs_state, reduce
from oscchain.lattice import ChainSpec, build_potential

QUENCH_PEAKS = {
    ("periodic", 0.1): 0.09682630484433442,
    ("periodic", 0.2): 0.20879418670081784,
    ("periodic", 0.3): 0.27143303647588596,
    ("open", 0.1): 0.05917227325373008,
    ("open", 0.2): 0.10607899658542091,
    ("open", 0.3): 0.14100126815864192,
}

RAMP_FIRST_MAXIMA = {
    1.0: 0.04896496356597143,
    5.0: 0.008967707794111823,
}


def _invariant_negativity(g):
    A, B, C = g[np.ix_([0, 2], [0, 2])], g[np.ix_([1, 3], [1, 3])], g[np.ix_([0, 2], [1, 3])]
    delta = np.linalg.det(A) + np.linalg.det(B) - 2 * np.linalg.det(C)
    nu2 = (delta - math.sqrt(max(delta**2 - 4 * np.linalg.det(g), 0.0))) / 2
    return max(0.0, -0.5 * math.log2(nu2))


@pytest.mark.parametrize("key", sorted(QUENCH_PEAKS))
def test_quench_peaks(key):
    boundary, c = key
    sites, horizon = ((0, 4), 40.0) if boundary == "periodic" else ((0, 7), 60.0)
    s = quench_series(ChainSpec(8, c, boundary), list(sites), time_grid(horizon, 0.05))
    assert s.peak == pytest.approx(QUENCH_PEAKS[key], rel=1e-9)


@pytest.mark.parametrize("duration", sorted(RAMP_FIRST_MAXIMA))
def test_ramp_first_maxima(duration):
    cfg = ScenarioConfig("ramp_scan", ChainSpec(8, 0.1, "open"), sites=(0, 7), t_end=60.0)
    _, value, _ = ramp_point(cfg, duration)
    assert value == pytest.approx(RAMP_FIRST_MAXIMA[duration], rel=1e-7)


@pytest.mark.parametrize("c", [0.1, 0.3, 0.5])
def test_invariant_formula_matches_symplectic_route(c):
    ground = gibbs_state(build_potential(ChainSpec(6, c, "open")), 0.0)
    for pair in ([0, 1], [2, 3], [0, 2]):
        r = reduce(ground, pair)
        assert log_negativity(r) == pytest.approx(_invariant_negativity(r), abs=1e-10)
