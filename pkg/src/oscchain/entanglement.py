"""Symplectic spectra, partial transposition and logarithmic negativity.

All functions accept a single covariance matrix or a stack of them
(leading axes are broadcast), which keeps time series vectorized.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .gaussian import VALIDITY_TOL, symplectic_form

__all__ = [
    "symplectic_eigenvalues",
    "partial_transpose",
    "log_negativity",
    "min_pt_eigenvalue",
    "epr_witness_bound",
]


def _log(x, base):
    return np.log(x) / np.log(base)


def symplectic_eigenvalues(gamma: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues in ascending order, one per mode.

    Computed as the positive eigenvalues of the Hermitian matrix
    ``i Gamma^(1/2) sigma Gamma^(1/2)``, whose spectrum is ``{+nu, -nu}``.
    """
    gamma = np.asarray(gamma, dtype=float)
    n = gamma.shape[-1] // 2
    lam, U = np.linalg.eigh(gamma)
    if np.any(lam <= 0):
        raise ValueError("covariance matrix is not positive definite")
    root = (U * np.sqrt(lam)[..., None, :]) @ np.swapaxes(U, -1, -2)
    K = root @ symplectic_form(n) @ root
    ev = np.linalg.eigvalsh(1j * K)
    return ev[..., n:]


def partial_transpose(gamma: np.ndarray, partition: Iterable[int]) -> np.ndarray:
    """Flip the sign of the momenta of the modes in ``partition``."""
    gamma = np.array(gamma, dtype=float, copy=True)
    n = gamma.shape[-1] // 2
    part = sorted({int(a) for a in partition})
    if not part or len(part) >= n or part[0] < 0 or part[-1] >= n:
        raise ValueError(f"partition {part} must be a nonempty proper subset of 0..{n - 1}")
    sign = np.ones(2 * n)
    sign[[n + a for a in part]] = -1.0
    return gamma * sign[:, None] * sign[None, :]


def _clamp(nu):
    # eigensolver noise just below 1 must not register as entanglement
    return np.where((nu < 1.0) & (nu >= 1.0 - VALIDITY_TOL), 1.0, nu)


def min_pt_eigenvalue(gamma: np.ndarray, partition: Iterable[int] = (0,)) -> np.ndarray:
    """Smallest symplectic eigenvalue of the partially transposed state."""
    return symplectic_eigenvalues(partial_transpose(gamma, partition))[..., 0]


def log_negativity(gamma: np.ndarray, partition: Iterable[int] = (0,), base: float = 2) -> np.ndarray | float:
    """Logarithmic negativity ``sum_i max(0, -log nu~_i)``.

    ``base`` selects the unit: 2 gives ebits, ``np.e`` nats.
    """
    nu = _clamp(symplectic_eigenvalues(partial_transpose(gamma, partition)))
    en = np.sum(np.maximum(0.0, -_log(nu, base)), axis=-1)
    return float(en) if np.ndim(en) == 0 else en


def epr_witness_bound(gamma: np.ndarray, n: int = 0, m: int = 1, base: float = 2) -> np.ndarray | float:
    """Lower bound on ``E_N`` from the EPR variances of modes ``n`` and ``m``.

    Uses raw moments ``<(q_n - q_m)^2>`` and ``<(p_n + p_m)^2>``, i.e. half
    of the corresponding combinations of covariance entries.
    """
    gamma = np.asarray(gamma, dtype=float)
    modes = gamma.shape[-1] // 2
    if n == m or not (0 <= n < modes and 0 <= m < modes):
        raise ValueError(f"invalid mode pair ({n}, {m}) for {modes} modes")
    qn, qm, pn, pm = n, m, n + modes, m + modes
    var_q = (gamma[..., qn, qn] + gamma[..., qm, qm] - 2 * gamma[..., qn, qm]) / 2
    var_p = (gamma[..., pn, pn] + gamma[..., pm, pm] + 2 * gamma[..., pn, pm]) / 2
    bound = np.maximum(0.0, -_log(_clamp((var_q + var_p) / 2), base))
    return float(bound) if np.ndim(bound) == 0 else bound
