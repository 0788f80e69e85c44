"""Covariance-matrix dynamics under quadratic Hamiltonians.

Three independent routes are provided:

* the spectral propagator of a time-independent potential, evaluated in the
  eigenbasis of ``V`` (exact at every ``t``);
* the circulant ``f``/``g`` propagation functions of a periodic chain;
* classical RK4 integration of ``dGamma/dt = A Gamma + Gamma A^T`` for a
  linearly ramped coupling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import StepSizeError, UnstablePotentialError
from .gaussian import EIG_FLOOR, site_indices, symmetrize, symplectic_form
from .lattice import Boundary, ChainSpec, build_potential

__all__ = [
    "ModeBasis",
    "propagator",
    "symplectic_defect",
    "evolve",
    "time_grid",
    "fg_functions",
    "fg_covariance",
    "RampKind",
    "RampSchedule",
    "evolve_ramp",
    "tracked_moments",
]

# bytes per chunk of stacked propagator rows in tracked_moments
_CHUNK_BYTES = 64 * 2**20


class ModeBasis:
    """Eigendecomposition ``V = U diag(w^2) U^T``, shared by all times."""

    def __init__(self, V: np.ndarray):
        V = np.asarray(V, dtype=float)
        lam, U = np.linalg.eigh(V)
        if lam[0] <= EIG_FLOOR:
            raise UnstablePotentialError(f"potential not positive definite: eigenvalue {lam[0]:.3g}")
        self.V = V
        self.U = U
        self.freqs = np.sqrt(lam)

    @property
    def n_modes(self) -> int:
        return len(self.freqs)

    def propagator(self, t: float) -> np.ndarray:
        """Symplectic ``S(t)`` with ``x(t) = S(t) x(0)`` for ``x = (q, p)``."""
        w, U = self.freqs, self.U
        c, s = np.cos(w * t), np.sin(w * t)
        cos_wt = (U * c) @ U.T
        return np.block([
            [cos_wt, (U * (s / w)) @ U.T],
            [(U * (-w * s)) @ U.T, cos_wt],
        ])

    def to_modes(self, gamma: np.ndarray) -> np.ndarray:
        """Express a covariance matrix in the normal-mode coordinates of ``V``."""
        n = self.n_modes
        U = self.U
        out = np.zeros_like(gamma, dtype=float)
        for bi in (slice(0, n), slice(n, 2 * n)):
            for bj in (slice(0, n), slice(n, 2 * n)):
                block = gamma[bi, bj]
                if np.any(block):
                    out[bi, bj] = U.T @ block @ U
        return out


def propagator(V: np.ndarray, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be >= 0")
    return ModeBasis(V).propagator(t)


def symplectic_defect(S: np.ndarray) -> float:
    """``max |S sigma S^T - sigma|``."""
    sigma = symplectic_form(S.shape[0] // 2)
    return float(np.abs(S @ sigma @ S.T - sigma).max())


def evolve(gamma0: np.ndarray, S: np.ndarray) -> np.ndarray:
    gamma0 = np.asarray(gamma0, dtype=float)
    if S.shape[-1] != gamma0.shape[0] or gamma0.shape[0] != gamma0.shape[1]:
        raise ValueError(f"dimension mismatch: S {S.shape} vs Gamma {gamma0.shape}")
    return symmetrize(S @ gamma0 @ np.swapaxes(S, -1, -2))


def time_grid(t_end: float, dt_sample: float) -> np.ndarray:
    """``0, dt, 2 dt, ...`` up to and including ``t_end`` (within rounding)."""
    if not dt_sample > 0 or t_end < 0:
        raise ValueError("need dt_sample > 0 and t_end >= 0")
    n = int(np.floor(t_end / dt_sample + 1e-9))
    return dt_sample * np.arange(n + 1)


# -- circulant route -------------------------------------------------------

def _fg_with_derivative(spec: ChainSpec, t: float):
    if spec.boundary is not Boundary.PERIODIC:
        raise NotImplementedError("f/g propagation functions require a periodic chain")
    n = spec.n_sites
    l = np.arange(1, n + 1)
    w = np.sqrt(1 + 4 * spec.coupling * np.sin(np.pi * l / n) ** 2)
    phase = np.cos(2 * np.pi * np.outer(np.arange(n), l) / n) / n
    f = phase @ np.cos(w * t)
    g = phase @ (np.sin(w * t) / w)
    fdot = phase @ (-w * np.sin(w * t))
    return f, g, fdot


def fg_functions(spec: ChainSpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Propagation functions ``f_k(t)``, ``g_k(t)`` for ``k = 0..N-1``.

    ``q_k(t) = sum_r q_r(0) f_{r-k}(t) + p_r(0) g_{r-k}(t)`` with indices mod N.
    """
    f, g, _ = _fg_with_derivative(spec, t)
    return f, g


def _circulant(v: np.ndarray) -> np.ndarray:
    # C[k, n] = v[(k - n) mod N]
    n = len(v)
    k = np.arange(n)
    return v[(k[:, None] - k[None, :]) % n]


def fg_covariance(spec: ChainSpec, t: float) -> np.ndarray:
    """Covariance of the quenched periodic chain from the vacuum, via f and g.

    Second moments are assembled from the convolution sums ``a..e``; with the
    doubled convention ``Gamma(0) = I`` the blocks are ``a + d``, ``b + e``
    and ``c + a``.
    """
    f, g, fdot = _fg_with_derivative(spec, t)
    F, G, Fd = _circulant(f), _circulant(g), _circulant(fdot)
    a = F.T @ F
    d = G.T @ G
    c = Fd.T @ Fd
    b = 0.5 * (F.T @ Fd + Fd.T @ F)
    e = 0.5 * (G.T @ F + F.T @ G)
    qp = b + e
    return symmetrize(np.block([[a + d, qp], [qp.T, c + a]]))


# -- ramped coupling -------------------------------------------------------

class RampKind(str, enum.Enum):
    SUDDEN = "sudden"
    LINEAR = "linear"


@dataclass(frozen=True)
class RampSchedule:
    kind: RampKind
    ramp_duration: float
    target_coupling: float

    def __post_init__(self):
        object.__setattr__(self, "kind", RampKind(self.kind))
        if self.ramp_duration < 0 or self.target_coupling < 0:
            raise ValueError("ramp_duration and target_coupling must be >= 0")
        if (self.kind is RampKind.SUDDEN) != (self.ramp_duration == 0):
            raise ValueError("a sudden schedule has zero duration and vice versa")

    @classmethod
    def linear(cls, duration: float, c: float) -> "RampSchedule":
        if duration == 0:
            return cls(RampKind.SUDDEN, 0.0, c)
        return cls(RampKind.LINEAR, duration, c)

    def coupling_at(self, t: float) -> float:
        if self.kind is RampKind.SUDDEN or t >= self.ramp_duration:
            return self.target_coupling
        return self.target_coupling * t / self.ramp_duration


def _rk4_segment(gamma, t0, t1, dt, V0, dV, frac_of_t):
    n = V0.shape[0]

    def rhs(t, g):
        V = V0 + frac_of_t(t) * dV
        x = np.vstack([g[n:], -V @ g[:n]])
        return x + x.T

    steps = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
    h = (t1 - t0) / steps
    t = t0
    for i in range(steps):
        k1 = rhs(t, gamma)
        k2 = rhs(t + h / 2, gamma + h / 2 * k1)
        k3 = rhs(t + h / 2, gamma + h / 2 * k2)
        k4 = rhs(t + h, gamma + h * k3)
        gamma = symmetrize(gamma + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        t = t0 + (i + 1) * h
    return gamma


def evolve_ramp(
    gamma0: np.ndarray,
    spec: ChainSpec,
    schedule: RampSchedule,
    dt: float,
    t_end: float,
    dt_sample: float | None = None,
    drift_tol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray]:
    """Evolve under the coupling ``c(t) = c min(t/t', 1)``.

    RK4 with step ``<= dt`` covers ``[0, t']``; from ``t'`` on the exact
    propagator of the final potential takes over. Returns the sample times and
    the stacked covariance matrices.

    Raises :class:`StepSizeError` when ``sqrt(det Gamma)``, conserved by any
    symplectic flow, drifts by more than ``drift_tol`` (relative).
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    tp = schedule.ramp_duration
    if t_end < tp:
        raise ValueError(f"t_end={t_end} must cover the ramp duration {tp}")
    times = time_grid(t_end, dt_sample if dt_sample is not None else dt)
    gamma0 = np.asarray(gamma0, dtype=float)
    V0 = build_potential(spec, 0.0)
    V1 = build_potential(spec, schedule.target_coupling)
    _, logdet0 = np.linalg.slogdet(gamma0)

    def advance(gamma, t0, t1):
        gamma = _rk4_segment(gamma, t0, t1, dt, V0, V1 - V0, lambda s: s / tp)
        _, logdet = np.linalg.slogdet(gamma)
        drift = abs(np.expm1((logdet - logdet0) / 2))
        if drift > drift_tol:
            raise StepSizeError(
                f"purity drift {drift:.2e} at t={t1:.4g} exceeds {drift_tol:g}; reduce dt (now {dt:g})"
            )
        return gamma

    out = np.empty((len(times),) + gamma0.shape)
    gamma, t_now = gamma0, 0.0
    ramp_times = times[times < tp]
    for i, t in enumerate(ramp_times):
        if t > t_now:
            gamma = advance(gamma, t_now, t)
            t_now = t
        out[i] = gamma
    if tp > t_now:
        gamma = advance(gamma, t_now, tp)
    basis = ModeBasis(V1)
    for i in range(len(ramp_times), len(times)):
        out[i] = evolve(gamma, basis.propagator(times[i] - tp))
    return times, out


# -- reduced dynamics ------------------------------------------------------

def tracked_moments(
    V: np.ndarray | ModeBasis,
    gamma0: np.ndarray,
    sites: Sequence[int],
    times: Sequence[float],
) -> np.ndarray:
    """Reduced covariance matrices of ``sites`` at each of ``times``.

    Only the propagator rows of the tracked sites are formed, in the normal-mode
    basis of ``V``, so each sample costs ``O(k n^2)`` instead of ``O(n^3)``.
    Returns an array of shape ``(len(times), 2k, 2k)``.
    """
    basis = V if isinstance(V, ModeBasis) else ModeBasis(V)
    n = basis.n_modes
    gamma0 = np.asarray(gamma0, dtype=float)
    if gamma0.shape != (2 * n, 2 * n):
        raise ValueError(f"dimension mismatch: Gamma {gamma0.shape} vs {n} modes")
    site_indices(n, sites)
    times = np.asarray(times, dtype=float)
    k = len(sites)
    Ur = basis.U[list(sites), :]
    w = basis.freqs
    is_identity = np.array_equal(gamma0, np.eye(2 * n))
    g_modes = None if is_identity else basis.to_modes(gamma0)

    out = np.empty((len(times), 2 * k, 2 * k))
    chunk = max(1, _CHUNK_BYTES // (8 * 4 * k * n))
    for start in range(0, len(times), chunk):
        t = times[start:start + chunk]
        c = np.cos(np.outer(t, w))[:, None, :]
        s = np.sin(np.outer(t, w))[:, None, :]
        R = np.concatenate([
            np.concatenate([Ur * c, Ur * (s / w)], axis=2),
            np.concatenate([Ur * (-w * s), Ur * c], axis=2),
        ], axis=1)
        if is_identity:
            Y = R
        else:
            Y = (R.reshape(-1, 2 * n) @ g_modes).reshape(R.shape)
        out[start:start + len(t)] = symmetrize(Y @ np.swapaxes(R, 1, 2))
    return out
