"""Scenario runners: sudden quench, ramp scan, decoherent quench, channel
transport and distance falloff, plus onset/peak extraction.

Site indices are 0-based throughout this module; configuration files use
1-based labels and are converted on parsing.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .decoherence import Calibration, calibrate_zeta, decoherent_quench
from .dynamics import ModeBasis, RampSchedule, evolve_ramp, time_grid, tracked_moments
from .entanglement import epr_witness_bound, log_negativity, min_pt_eigenvalue, symplectic_eigenvalues
from .errors import ConfigError, PhysicsValidityError
from .gaussian import VALIDITY_TOL, gibbs_state, reduce, two_mode_squeezed
from .lattice import BathSpec, Boundary, ChainSpec, build_potential
from .units import PhysicalParams, to_dimensionless

__all__ = [
    "ONSET_EPS",
    "ScenarioKind",
    "ScenarioConfig",
    "Series",
    "ScenarioResult",
    "series_from_reduced",
    "onset_time",
    "first_maximum",
    "linear_fit",
    "run_quench",
    "run_ramp_scan",
    "run_decohere",
    "channel_initial_state",
    "run_channel",
    "falloff_scan",
    "run_falloff",
    "run_calibrate",
    "run_scenario",
]

ONSET_EPS = 1e-6


class ScenarioKind(str, enum.Enum):
    QUENCH = "quench"
    RAMP_SCAN = "ramp_scan"
    DECOHERE = "decohere"
    CHANNEL = "channel"
    FALLOFF = "falloff"
    CALIBRATE = "calibrate"


@dataclass(frozen=True)
class ScenarioConfig:
    kind: ScenarioKind
    chain: ChainSpec
    sites: tuple[int, int] = (0, 1)
    t_end: float = 40.0
    dt_sample: float = 0.05
    dt: float = 1e-3
    ramp: RampSchedule | None = None
    ramp_durations: tuple[float, ...] = ()
    bath: BathSpec | None = None
    calibrate_bath: bool = False
    physical: PhysicalParams | None = None
    squeezing: float = 1.0
    distances: tuple[int, ...] = ()
    log_base: float = 2.0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        n = self.chain.n_sites
        if len(self.sites) != 2 or self.sites[0] == self.sites[1]:
            raise ValueError(f"sites must name two distinct sites, got {self.sites}")
        if any(not 0 <= s < n for s in self.sites):
            raise ValueError(f"sites {self.sites} out of range for a chain of {n}")
        if not (self.t_end > 0 and self.dt_sample > 0 and self.dt > 0):
            raise ValueError("t_end, dt_sample and dt must be > 0")
        needs_bath = self.kind in (ScenarioKind.DECOHERE, ScenarioKind.CALIBRATE)
        if needs_bath != (self.bath is not None):
            raise ValueError(f"scenario {self.kind.value} {'requires' if needs_bath else 'takes no'} bath section")
        if self.calibrate_bath and (self.physical is None and self.kind is not ScenarioKind.CALIBRATE):
            raise ValueError("calibrating the bath coupling needs physical.q_factor")
        if self.log_base not in (2.0, math.e):
            raise ValueError("log_base must be 2 or e")
        if self.squeezing < 0:
            raise ValueError("squeezing must be >= 0")
        for d in self.distances:
            if not 1 <= d < n:
                raise ValueError(f"distance {d} out of range for a chain of {n}")


@dataclass
class Series:
    """Per-sample entanglement data of one tracked pair."""

    times: np.ndarray
    en: np.ndarray
    witness: np.ndarray
    nu_min_pt: np.ndarray
    validity_margin: np.ndarray
    base: float = 2.0

    @property
    def onset(self) -> float | None:
        return onset_time(self.times, self.en)

    @property
    def peak(self) -> float:
        return float(self.en.max()) if len(self.en) else 0.0

    @property
    def peak_time(self) -> float | None:
        return float(self.times[int(np.argmax(self.en))]) if len(self.en) else None

    def peak_in(self, base: float) -> float:
        return self.peak * math.log(self.base) / math.log(base)

    def summary(self) -> dict:
        return {
            "onset_time": self.onset,
            "peak": self.peak,
            "peak_time": self.peak_time,
            "peak_log2": self.peak_in(2.0),
            "peak_ln": self.peak_in(math.e),
            "min_validity_margin": float(self.validity_margin.min()) if len(self.en) else None,
        }


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    series: dict[str, Series] = field(default_factory=dict)
    tables: dict[str, tuple[list[str], list[tuple]]] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    calibration: Calibration | None = None


def series_from_reduced(times: np.ndarray, reduced: np.ndarray, base: float = 2.0) -> Series:
    """Entanglement columns for a stack of two-mode covariance matrices.

    Raises :class:`PhysicsValidityError` if any sample violates the
    uncertainty principle beyond :data:`VALIDITY_TOL`.
    """
    margin = symplectic_eigenvalues(reduced)[:, 0] - 1.0
    if len(margin) and margin.min() < -VALIDITY_TOL:
        i = int(np.argmin(margin))
        raise PhysicsValidityError(f"unphysical state at t={times[i]:.6g}: margin {margin[i]:.3g}")
    return Series(
        times=np.asarray(times, dtype=float),
        en=np.asarray(log_negativity(reduced, (0,), base)),
        witness=np.asarray(epr_witness_bound(reduced, 0, 1, base)),
        nu_min_pt=np.asarray(min_pt_eigenvalue(reduced, (0,))),
        validity_margin=margin,
        base=base,
    )


def onset_time(times: Sequence[float], en: Sequence[float], eps: float = ONSET_EPS) -> float | None:
    """First time ``E_N`` exceeds ``eps``, linearly interpolated between samples."""
    en = np.asarray(en)
    above = np.flatnonzero(en > eps)
    if len(above) == 0:
        return None
    i = int(above[0])
    if i == 0:
        return float(times[0])
    t0, t1, e0, e1 = times[i - 1], times[i], en[i - 1], en[i]
    return float(t0 + (eps - e0) / (e1 - e0) * (t1 - t0))


def first_maximum(times: Sequence[float], en: Sequence[float], eps: float = ONSET_EPS) -> tuple[float, float | None]:
    """Largest ``E_N`` within the first contiguous stretch where ``E_N > eps``."""
    en = np.asarray(en)
    above = en > eps
    if not above.any():
        return 0.0, None
    i0 = int(np.argmax(above))
    stop = np.flatnonzero(~above[i0:])
    i1 = i0 + int(stop[0]) if len(stop) else len(en)
    j = i0 + int(np.argmax(en[i0:i1]))
    return float(en[j]), float(times[j])


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line; returns ``(slope, intercept, R^2)``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = np.sum((y - (slope * x + intercept)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def _map(func: Callable, items: Iterable, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


# -- scenarios -------------------------------------------------------------

def quench_series(chain: ChainSpec, sites: Sequence[int], times: np.ndarray, base: float = 2.0) -> Series:
    """Vacuum start, sudden switch to ``chain.coupling`` at ``t = 0``."""
    basis = ModeBasis(build_potential(chain))
    reduced = tracked_moments(basis, np.eye(2 * chain.n_sites), sites, times)
    return series_from_reduced(times, reduced, base)


def run_quench(cfg: ScenarioConfig) -> ScenarioResult:
    """Vacuum start and coupling switch; ramped if ``cfg.ramp`` is linear."""
    if cfg.ramp is not None and cfg.ramp.ramp_duration > 0:
        s, value, when = ramp_point(cfg, cfg.ramp.ramp_duration)
        summary = s.summary()
        summary.update(first_max=value, first_max_time=when)
        return ScenarioResult(cfg, {"main": s}, summary=summary)
    times = time_grid(cfg.t_end, cfg.dt_sample)
    s = quench_series(cfg.chain, cfg.sites, times, cfg.log_base)
    summary = s.summary()
    summary["first_max"], summary["first_max_time"] = first_maximum(s.times, s.en)
    return ScenarioResult(cfg, {"main": s}, summary=summary)


def ramp_point(cfg: ScenarioConfig, duration: float) -> tuple[Series, float, float | None]:
    """Series and first maximum for one switching time ``t'``.

    The horizon is ``t' + cfg.t_end`` so every ramp sees the same post-ramp
    window.
    """
    schedule = RampSchedule.linear(duration, cfg.chain.coupling)
    n = cfg.chain.n_sites
    times, gammas = evolve_ramp(np.eye(2 * n), cfg.chain, schedule, cfg.dt,
                                duration + cfg.t_end, cfg.dt_sample)
    s = series_from_reduced(times, reduce(gammas, cfg.sites), cfg.log_base)
    value, when = first_maximum(s.times, s.en)
    return s, value, when


def run_ramp_scan(cfg: ScenarioConfig, durations: Sequence[float] | None = None) -> ScenarioResult:
    durations = list(cfg.ramp_durations if durations is None else durations)
    if not durations:
        raise ConfigError("ramp_scan needs at least one ramp duration")
    points = _map(lambda d: ramp_point(cfg, d), durations, cfg.threads)
    result = ScenarioResult(cfg)
    rows = []
    for d, (s, value, when) in zip(durations, points):
        result.series[f"tprime_{d:g}"] = s
        rows.append((d, value, when))
    result.tables["ramp_scan"] = (["t_prime", "first_max_E_N", "first_max_time"], rows)
    result.summary = {"first_maxima": {f"{d:g}": v for d, v, _ in rows}}
    return result


def _bath_for(cfg: ScenarioConfig, cache=None) -> tuple[BathSpec, Calibration | None]:
    bath = cfg.bath
    temperature = bath.temperature
    if cfg.physical is not None:
        temperature = to_dimensionless(cfg.physical).temperature
    calibration = None
    zeta = bath.coupling
    if cfg.calibrate_bath:
        q = cfg.physical.q_factor
        if cache is not None:
            calibration = cache.get_or_compute(q, bath.modes_per_oscillator, bath.cutoff)
        else:
            calibration = calibrate_zeta(q, bath.modes_per_oscillator, bath.cutoff)
        zeta = calibration.zeta
    return BathSpec(bath.modes_per_oscillator, bath.cutoff, zeta, temperature), calibration


def run_decohere(cfg: ScenarioConfig, cache=None) -> ScenarioResult:
    """Sudden quench of a chain whose sites carry calibrated Ohmic baths."""
    bath, calibration = _bath_for(cfg, cache)
    times = time_grid(cfg.t_end, cfg.dt_sample)
    reduced = decoherent_quench(cfg.chain.with_coupling(0.0), bath, cfg.chain.coupling, times, cfg.sites)
    s = series_from_reduced(times, reduced, cfg.log_base)
    summary = s.summary()
    summary["bath"] = {
        "modes_per_oscillator": bath.modes_per_oscillator,
        "cutoff": bath.cutoff,
        "zeta": bath.coupling,
        "temperature": bath.temperature,
    }
    if cfg.physical is not None:
        summary["kT_over_hf"] = to_dimensionless(cfg.physical).temperature
    return ScenarioResult(cfg, {"main": s}, summary=summary, calibration=calibration)


def channel_initial_state(chain: ChainSpec, r: float) -> np.ndarray:
    """Kept mode (index 0) shares a two-mode squeezed state with chain site 1.

    The remaining chain sites keep the reduced state of the coupled chain's
    ground state; the squeezed pair is uncorrelated with them.
    """
    n = chain.n_sites
    ground = gibbs_state(build_potential(chain), 0.0)
    dim = n + 1
    gamma = np.zeros((2 * dim, 2 * dim))
    rest = list(range(1, n))
    idx_rest = [1 + s for s in rest] + [dim + 1 + s for s in rest]
    gamma[np.ix_(idx_rest, idx_rest)] = reduce(ground, rest)
    pair = [0, 1, dim, dim + 1]
    gamma[np.ix_(pair, pair)] = two_mode_squeezed(r)
    return gamma


def run_channel(cfg: ScenarioConfig) -> ScenarioResult:
    """Arrival times of entanglement between a kept mode and each chain site.

    The kept mode evolves under a free unit-frequency Hamiltonian, decoupled
    from the chain.
    """
    chain = cfg.chain
    n = chain.n_sites
    V = np.zeros((n + 1, n + 1))
    V[0, 0] = 1.0
    V[1:, 1:] = build_potential(chain)
    gamma0 = channel_initial_state(chain, cfg.squeezing)
    times = time_grid(cfg.t_end, cfg.dt_sample)
    reduced_all = tracked_moments(ModeBasis(V), gamma0, list(range(n + 1)), times)
    result = ScenarioResult(cfg)
    rows = []
    for site in range(1, n + 1):
        s = series_from_reduced(times, reduce(reduced_all, [0, site]), cfg.log_base)
        result.series[f"site{site}"] = s
        rows.append((site, s.onset, s.peak))
    result.tables["arrival"] = (["site", "arrival_time", "peak_E_N"], rows)
    fit_rows = [(site, t) for site, t, _ in rows if site >= 2 and t is not None]
    summary = {"arrival_times": {str(site): t for site, t, _ in rows}}
    if len(fit_rows) >= 3:
        slope, intercept, r2 = linear_fit(*zip(*fit_rows))
        summary["arrival_fit"] = {"slope": slope, "intercept": intercept, "r2": r2}
    result.summary = summary
    return result


def falloff_scan(
    chain: ChainSpec,
    distances: Sequence[int],
    times: np.ndarray,
    base: float = 2.0,
) -> dict[int, Series]:
    """Quench series of the pairs ``(0, d)`` on a chain, one per distance ``d``.

    All tracked sites share one reduced evolution.
    """
    distances = sorted({int(d) for d in distances})
    sites = [0] + distances
    basis = ModeBasis(build_potential(chain))
    reduced = tracked_moments(basis, np.eye(2 * chain.n_sites), sites, times)
    return {d: series_from_reduced(times, reduce(reduced, [0, i + 1]), base)
            for i, d in enumerate(distances)}


def falloff_statistics(scan: dict[int, Series], slope_range=(4, 32), onset_range=(2, 8)) -> dict:
    """Log-log slope of peak vs distance and linearity of onset vs distance."""
    out = {}
    pts = [(d, s.peak) for d, s in scan.items() if slope_range[0] <= d <= slope_range[1] and s.peak > 0]
    if len(pts) >= 2:
        d, p = zip(*pts)
        slope, _, r2 = linear_fit(np.log(d), np.log(p))
        out["loglog_slope"] = slope
        out["loglog_r2"] = r2
    ons = [(d, s.onset) for d, s in scan.items() if onset_range[0] <= d <= onset_range[1]]
    if len(ons) >= 3 and all(t is not None for _, t in ons):
        d, t = zip(*ons)
        slope, intercept, r2 = linear_fit(d, t)
        out["onset_fit"] = {"slope": slope, "intercept": intercept, "r2": r2}
        out["onset_strictly_increasing"] = bool(np.all(np.diff(t) > 0))
    return out


def run_falloff(cfg: ScenarioConfig) -> ScenarioResult:
    if cfg.chain.boundary is not Boundary.PERIODIC:
        raise ConfigError("falloff scans use a periodic chain")
    distances = cfg.distances or tuple(range(1, min(33, cfg.chain.n_sites // 2 + 1)))
    times = time_grid(cfg.t_end, cfg.dt_sample)
    scan = falloff_scan(cfg.chain, distances, times, cfg.log_base)
    result = ScenarioResult(cfg)
    rows = []
    for d, s in scan.items():
        result.series[f"distance{d}"] = s
        rows.append((d, s.peak, s.peak_time, s.onset))
    result.tables["falloff"] = (["distance", "peak_E_N", "peak_time", "onset_time"], rows)
    result.summary = falloff_statistics(scan)
    return result


def run_calibrate(cfg: ScenarioConfig, cache=None) -> ScenarioResult:
    bath = cfg.bath
    q = cfg.physical.q_factor if cfg.physical is not None else None
    if q is None:
        raise ConfigError("calibrate needs physical.q_factor")
    if cache is not None:
        cal = cache.get_or_compute(q, bath.modes_per_oscillator, bath.cutoff)
    else:
        cal = calibrate_zeta(q, bath.modes_per_oscillator, bath.cutoff)
    result = ScenarioResult(cfg, calibration=cal)
    result.tables["calibration"] = (
        ["q_factor", "modes", "cutoff", "zeta", "fitted_rate", "fit_residual"],
        [(cal.q_factor, cal.modes, cal.cutoff, cal.zeta, cal.rate, cal.residual)],
    )
    result.summary = {"zeta": cal.zeta, "fitted_rate": cal.rate, "target_rate": 1.0 / q,
                      "relative_error": abs(cal.rate * q - 1.0)}
    return result


def run_scenario(cfg: ScenarioConfig, cache=None) -> ScenarioResult:
    kind = cfg.kind
    if kind is ScenarioKind.QUENCH:
        return run_quench(cfg)
    if kind is ScenarioKind.RAMP_SCAN:
        return run_ramp_scan(cfg)
    if kind is ScenarioKind.DECOHERE:
        return run_decohere(cfg, cache)
    if kind is ScenarioKind.CHANNEL:
        return run_channel(cfg)
    if kind is ScenarioKind.FALLOFF:
        return run_falloff(cfg)
    return run_calibrate(cfg, cache)
