"""Discrete Ohmic heat baths: Q-factor calibration and decoherent quenches.

Every chain site couples through ``zeta * w_i * q_j * q_j^(i)`` to ``M`` bath
modes of frequencies ``w_i = i Lambda / M``, giving a discretized Ohmic
spectral density ``J(w) = (pi/2) zeta^2 (M/Lambda) w``. The whole
supersystem starts in its joint Gibbs state and then evolves unitarily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import bisect
from scipy.signal import find_peaks

from .dynamics import ModeBasis, time_grid, tracked_moments
from .errors import RecurrenceError, StabilityError
from .gaussian import gibbs_state
from .lattice import BathSpec, ChainSpec, augment_with_baths, build_potential

__all__ = [
    "BathSpec",
    "Calibration",
    "check_recurrence",
    "ohmic_zeta_estimate",
    "energy_decay_rate",
    "calibrate_zeta",
    "coupled_gibbs_initial",
    "decoherent_quench",
]

MIN_CALIBRATION_MODES = 10


@dataclass(frozen=True)
class Calibration:
    q_factor: float
    modes: int
    cutoff: float
    zeta: float
    rate: float
    residual: float


def check_recurrence(bath: BathSpec, t_max: float) -> None:
    """Refuse horizons that reach the bath recurrence time ``2 pi M / Lambda``."""
    if bath.modes_per_oscillator == 0:
        return
    if not t_max < bath.recurrence_time:
        needed = math.floor(t_max * bath.cutoff / (2 * math.pi)) + 1
        raise RecurrenceError(
            f"horizon t={t_max:g} reaches the bath recurrence time {bath.recurrence_time:.4g}; "
            f"use at least M={needed} modes per oscillator at cutoff {bath.cutoff:g}"
        )


def ohmic_zeta_estimate(q_factor: float, modes: int, cutoff: float) -> float:
    """Markovian estimate: damping ``gamma = pi zeta^2 M / (2 Lambda) = 1/Q``."""
    return math.sqrt(2 * cutoff / (math.pi * modes * q_factor))


def _fit_window(q_factor: float, bath: BathSpec) -> float:
    return min(5 * q_factor, 0.8 * bath.recurrence_time)


def energy_decay_rate(
    bath: BathSpec,
    t_fit: float,
    excess: float = 2.0,
    dt_sample: float = 0.05,
) -> tuple[float, float]:
    """Fitted decay rate of a single unit oscillator's excess energy.

    The oscillator and its bath start in the joint ground state with ``excess``
    added to ``Gamma_qq`` of the oscillator. The mean energy above equilibrium
    is sampled on ``[0, t_fit]``, its local maxima form the envelope, and a
    log-linear least-squares fit gives the rate. Returns ``(rate, rms)`` with
    ``rms`` the residual of the fit in log space.
    """
    V = augment_with_baths(np.eye(1), bath)
    gamma_eq = gibbs_state(V, 0.0)
    gamma0 = gamma_eq.copy()
    gamma0[0, 0] += excess
    times = time_grid(t_fit, dt_sample)
    red = tracked_moments(ModeBasis(V), gamma0, [0], times)
    e_eq = (gamma_eq[0, 0] + gamma_eq[V.shape[0], V.shape[0]]) / 4
    energy = (red[:, 0, 0] + red[:, 1, 1]) / 4 - e_eq
    peaks, _ = find_peaks(energy)
    if len(peaks) < 3:
        peaks = np.arange(len(times))
    slope, intercept = np.polyfit(times[peaks], np.log(energy[peaks]), 1)
    resid = np.log(energy[peaks]) - (slope * times[peaks] + intercept)
    return -float(slope), float(np.sqrt(np.mean(resid**2)))


def calibrate_zeta(
    q_factor: float,
    modes: int = 300,
    cutoff: float = 5.0,
    xtol_rel: float = 1e-7,
) -> Calibration:
    """Coupling ``zeta`` whose fitted energy-decay rate equals ``1/Q``.

    Bisection on ``zeta`` inside the stability range ``zeta < 1/sqrt(M)``,
    bracketed around :func:`ohmic_zeta_estimate`.
    """
    if not q_factor > 0:
        raise ValueError("q_factor must be > 0")
    if modes < MIN_CALIBRATION_MODES:
        raise ValueError(f"calibration needs at least {MIN_CALIBRATION_MODES} bath modes, got {modes}")
    if math.isinf(q_factor):
        return Calibration(q_factor, modes, cutoff, 0.0, 0.0, 0.0)
    target = 1.0 / q_factor
    t_fit = _fit_window(q_factor, BathSpec(modes, cutoff))
    # 1 - M zeta^2 is the softened on-site term of a unit oscillator
    zeta_stable = 1.0 / math.sqrt(modes)

    def objective(z):
        return energy_decay_rate(BathSpec(modes, cutoff, z), t_fit)[0] - target

    guess = min(ohmic_zeta_estimate(q_factor, modes, cutoff), 0.5 * zeta_stable)
    ceiling = zeta_stable * (1 - 1e-6)
    lo, hi = 0.9 * guess, min(1.1 * guess, ceiling)
    f_lo, f_hi = objective(lo), objective(hi)
    while f_lo >= 0 and lo > 1e-6 * guess:
        lo /= 4
        f_lo = objective(lo)
    if f_hi <= 0 and hi < ceiling:
        hi = ceiling
        f_hi = objective(hi)
    if not (f_lo < 0 < f_hi):
        raise StabilityError(
            f"no coupling in the stable range [0, {zeta_stable:.6g}) reaches decay rate 1/Q={target:.3g}"
        )
    zeta = bisect(objective, lo, hi, xtol=xtol_rel * guess)
    rate, residual = energy_decay_rate(BathSpec(modes, cutoff, zeta), t_fit)
    return Calibration(q_factor, modes, cutoff, float(zeta), rate, residual)


def coupled_gibbs_initial(chain: ChainSpec, bath: BathSpec) -> np.ndarray:
    """Joint Gibbs state of the uncoupled chain (``c = 0``) and its baths."""
    V = augment_with_baths(build_potential(chain, 0.0), bath)
    return gibbs_state(V, bath.temperature)


def decoherent_quench(
    chain: ChainSpec,
    bath: BathSpec,
    c_target: float,
    times: Sequence[float],
    sites: Sequence[int],
) -> np.ndarray:
    """Reduced covariance series of ``sites`` after switching the chain to ``c_target``.

    The baths are left untouched by the switch; the post-quench Hamiltonian is
    time independent, so the spectral route is exact.
    """
    times = np.asarray(times, dtype=float)
    check_recurrence(bath, float(times.max()) if len(times) else 0.0)
    gamma0 = coupled_gibbs_initial(chain, bath)
    V1 = augment_with_baths(build_potential(chain, c_target), bath)
    return tracked_moments(ModeBasis(V1), gamma0, sites, times)
