import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oscchain.dynamics import time_grid
from oscchain.errors import PhysicsValidityError
from oscchain.experiments import (
    ScenarioConfig,
    channel_initial_state,
    falloff_scan,
    falloff_statistics,
    first_maximum,
    linear_fit,
    onset_time,
    quench_series,
    run_channel,
    run_quench,
    run_ramp_scan,
    series_from_reduced,
)
from oscchain.entanglement import log_negativity, symplectic_eigenvalues
from oscchain.gaussian import reduce
from oscchain.lattice import ChainSpec


def test_onset_interpolates_linearly():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    en = np.array([0.0, 0.0, 3e-6, 1e-5])
    assert onset_time(t, en) == pytest.approx(1 + 1 / 3)


def test_onset_none_when_never_entangled():
    assert onset_time([0.0, 1.0], [0.0, 0.0]) is None


def test_first_maximum_uses_first_episode():
    t = np.arange(8.0)
    en = np.array([0, 0.2, 0.5, 0.1, 0, 0.9, 0.3, 0])
    assert first_maximum(t, en) == (0.5, 2.0)
    assert first_maximum(t, np.zeros(8)) == (0.0, None)


def test_first_maximum_runs_to_horizon():
    assert first_maximum([0, 1, 2], [0, 0.1, 0.3]) == (0.3, 2.0)


def test_linear_fit_exact_line():
    slope, intercept, r2 = linear_fit([1, 2, 3], [3, 5, 7])
    assert (slope, intercept, r2) == pytest.approx((2, 1, 1))


def test_unphysical_sample_raises():
    bad = np.stack([np.eye(4), 0.5 * np.eye(4)])
    with pytest.raises(PhysicsValidityError):
        series_from_reduced(np.array([0.0, 1.0]), bad)


def test_zero_coupling_never_entangles():
    cfg = ScenarioConfig("quench", ChainSpec(6, 0.0), sites=(0, 3), t_end=20.0)
    res = run_quench(cfg)
    assert res.series["main"].peak == 0.0
    assert res.series["main"].onset is None


def test_nearest_neighbours_entangle_immediately():
    s = quench_series(ChainSpec(8, 0.2), [0, 1], time_grid(2.0, 0.05))
    assert s.en[0] == 0.0 and s.en[1] > 0


@given(shift=st.integers(0, 7))
def test_rotation_invariance(shift):
    chain = ChainSpec(8, 0.2)
    times = time_grid(10.0, 0.1)
    ref = quench_series(chain, [0, 4], times).en
    moved = quench_series(chain, [shift, (shift + 4) % 8], times).en
    np.testing.assert_allclose(moved, ref, atol=1e-12)


def test_reflection_symmetry_open_chain():
    chain = ChainSpec(8, 0.2, "open")
    times = time_grid(20.0, 0.1)
    a = quench_series(chain, [0, 3], times).en
    b = quench_series(chain, [7, 4], times).en
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_witness_below_negativity_along_quench():
    s = quench_series(ChainSpec(8, 0.3), [0, 4], time_grid(40.0, 0.05))
    assert np.all(s.witness <= s.en + 1e-12)


def test_log_base_switch():
    cfg2 = ScenarioConfig("quench", ChainSpec(4, 0.3), sites=(0, 2), t_end=10.0)
    cfge = ScenarioConfig("quench", ChainSpec(4, 0.3), sites=(0, 2), t_end=10.0, log_base=math.e)
    a, b = run_quench(cfg2).series["main"], run_quench(cfge).series["main"]
    np.testing.assert_allclose(b.en, a.en * math.log(2), atol=1e-14)
    assert a.peak_in(math.e) == pytest.approx(b.peak)


def test_ramped_quench_reports_first_maximum():
    from oscchain.dynamics import RampSchedule

    cfg = ScenarioConfig("quench", ChainSpec(4, 0.3, "open"), sites=(0, 2), t_end=10.0,
                         ramp=RampSchedule.linear(1.0, 0.3), dt=1e-2)
    res = run_quench(cfg)
    assert res.series["main"].times[-1] == pytest.approx(11.0)
    assert res.summary["first_max"] > 0


def test_ramp_scan_table():
    cfg = ScenarioConfig("ramp_scan", ChainSpec(4, 0.3, "open"), sites=(0, 3), t_end=10.0,
                         dt=1e-2, ramp_durations=(0.0, 1.0), threads=2)
    res = run_ramp_scan(cfg)
    header, rows = res.tables["ramp_scan"]
    assert header == ["t_prime", "first_max_E_N", "first_max_time"]
    assert [r[0] for r in rows] == [0.0, 1.0]
    assert set(res.series) == {"tprime_0", "tprime_1"}


def test_channel_initial_state_is_physical():
    chain = ChainSpec(5, 0.1, "open")
    g = channel_initial_state(chain, 1.0)
    assert g.shape == (12, 12)
    assert symplectic_eigenvalues(g).min() >= 1 - 1e-10
    assert log_negativity(reduce(g, [0, 1])) == pytest.approx(2 / math.log(2))
    assert log_negativity(reduce(g, [0, 2])) == 0.0


def test_channel_without_squeezing_carries_nothing():
    cfg = ScenarioConfig("channel", ChainSpec(5, 0.1, "open"), t_end=20.0, squeezing=0.0)
    res = run_channel(cfg)
    assert all(s.peak == 0.0 for s in res.series.values())


def test_channel_arrival_order():
    cfg = ScenarioConfig("channel", ChainSpec(6, 0.1, "open"), t_end=40.0)
    res = run_channel(cfg)
    arrivals = [res.summary["arrival_times"][str(k)] for k in range(1, 7)]
    assert arrivals[0] == 0.0
    assert all(a is not None for a in arrivals)
    assert np.all(np.diff(arrivals) > 0)


def test_falloff_scan_and_statistics():
    chain = ChainSpec(32, 0.1)
    scan = falloff_scan(chain, [1, 2, 3, 4, 6, 8], time_grid(40.0, 0.05))
    assert sorted(scan) == [1, 2, 3, 4, 6, 8]
    peaks = [scan[d].peak for d in sorted(scan)]
    assert peaks[0] > peaks[1] > peaks[2]
    stats = falloff_statistics(scan, slope_range=(2, 8), onset_range=(2, 8))
    assert stats["loglog_slope"] < 0
    assert stats["onset_strictly_increasing"]


@pytest.mark.parametrize("kwargs", [
    {"sites": (0, 0)},
    {"sites": (0, 9)},
    {"t_end": 0.0},
    {"log_base": 10.0},
    {"distances": (8,)},
])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        ScenarioConfig("quench", ChainSpec(8, 0.1), **kwargs)


def test_decohere_config_needs_bath():
    with pytest.raises(ValueError):
        ScenarioConfig("decohere", ChainSpec(2, 0.4))
