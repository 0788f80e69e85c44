"""Gaussian-state covariance matrices.

Convention: ``Gamma[R, S] = 2 Re <(R - <R>)(S - <S>)>`` over the canonical
operators ordered ``(q_1, ..., q_n, p_1, ..., p_n)``. The vacuum is the
identity and a state is physical iff all symplectic eigenvalues are >= 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import UnstablePotentialError

__all__ = [
    "VALIDITY_TOL",
    "symplectic_form",
    "symmetrize",
    "sym_funm",
    "vacuum",
    "gibbs_state",
    "thermal_factors",
    "two_mode_squeezed",
    "site_indices",
    "reduce",
    "ValidityReport",
    "check_valid",
]

VALIDITY_TOL = 1e-8
EIG_FLOOR = 1e-12


def symplectic_form(n_modes: int) -> np.ndarray:
    """``[[0, I], [-I, 0]]`` in block ordering."""
    I = np.eye(n_modes)
    Z = np.zeros((n_modes, n_modes))
    return np.block([[Z, I], [-I, Z]])


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def sym_funm(V: np.ndarray, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``func`` to the eigenvalues of a symmetric positive definite matrix."""
    lam, U = np.linalg.eigh(V)
    if lam[0] <= EIG_FLOOR:
        raise UnstablePotentialError(f"matrix not positive definite: eigenvalue {lam[0]:.3g}")
    return symmetrize((U * func(lam)) @ U.T)


def vacuum(n_modes: int) -> np.ndarray:
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return np.eye(2 * n_modes)


def thermal_factors(freqs: np.ndarray, temperature: float) -> np.ndarray:
    """``coth(w / 2T)``, i.e. ``1 + 2 nbar``; equal to 1 at ``T = 0``."""
    freqs = np.asarray(freqs, dtype=float)
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0:
        return np.ones_like(freqs)
    # tiny temperatures overflow to inf, where coth is exactly 1
    with np.errstate(over="ignore"):
        return 1.0 / np.tanh(freqs / (2.0 * temperature))


def gibbs_state(V: np.ndarray, temperature: float = 0.0) -> np.ndarray:
    """Thermal state of ``H = (p.p + q.V.q)/2`` at dimensionless temperature ``T``.

    With ``W = V^(1/2)``: ``Gamma_qq = W^-1 coth(W/2T)``, ``Gamma_pp = W coth(W/2T)``
    and no q-p correlations.
    """
    lam, U = np.linalg.eigh(np.asarray(V, dtype=float))
    if lam[0] <= EIG_FLOOR:
        raise UnstablePotentialError(f"potential not positive definite: eigenvalue {lam[0]:.3g}")
    w = np.sqrt(lam)
    coth = thermal_factors(w, temperature)
    n = len(w)
    gamma = np.zeros((2 * n, 2 * n))
    gamma[:n, :n] = (U * (coth / w)) @ U.T
    gamma[n:, n:] = (U * (coth * w)) @ U.T
    return symmetrize(gamma)


def two_mode_squeezed(r: float) -> np.ndarray:
    """Two-mode squeezed vacuum with squeezing ``r``, ordering ``(q1, q2, p1, p2)``."""
    if r < 0:
        raise ValueError("squeezing must be >= 0")
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    gamma = ch * np.eye(4)
    gamma[0, 1] = gamma[1, 0] = sh
    gamma[2, 3] = gamma[3, 2] = -sh
    return gamma


def site_indices(n_modes: int, sites: Sequence[int]) -> list[int]:
    """Row indices ``(q_s..., p_s...)`` of the given modes in block ordering."""
    sites = [int(s) for s in sites]
    if len(set(sites)) != len(sites):
        raise ValueError(f"duplicate site indices in {sites}")
    for s in sites:
        if not 0 <= s < n_modes:
            raise ValueError(f"site index {s} out of range for {n_modes} modes")
    return sites + [s + n_modes for s in sites]


def reduce(gamma: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """Covariance matrix of the selected modes (partial trace over the rest).

    Works on stacks of matrices, acting on the last two axes.
    """
    gamma = np.asarray(gamma)
    idx = site_indices(gamma.shape[-1] // 2, sites)
    return gamma[..., idx, :][..., :, idx]


@dataclass(frozen=True)
class ValidityReport:
    nu_min: float
    margin: float
    ok: bool


def check_valid(gamma: np.ndarray, tol: float = VALIDITY_TOL) -> ValidityReport:
    """Uncertainty-principle check: smallest symplectic eigenvalue >= 1 - tol."""
    from .entanglement import symplectic_eigenvalues

    gamma = np.asarray(gamma, dtype=float)
    if not np.allclose(gamma, gamma.T, rtol=0, atol=1e-12 * max(1.0, np.abs(gamma).max())):
        raise ValueError("covariance matrix is not symmetric")
    try:
        nu_min = float(symplectic_eigenvalues(gamma)[0])
    except ValueError:
        # not even positive definite, so certainly unphysical
        nu_min = 0.0
    return ValidityReport(nu_min=nu_min, margin=nu_min - 1.0, ok=nu_min >= 1.0 - tol)
