"""Potential matrices for the oscillator chain and its attached bath modes.

Units are dimensionless (hbar = m = omega = 1), so the Hamiltonian reads
``H = (p.p + q.V.q) / 2`` with ``V`` the potential matrix built here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import UnstablePotentialError

__all__ = [
    "Boundary",
    "OpenEnds",
    "ChainSpec",
    "BathSpec",
    "build_potential",
    "dispersion",
    "bath_frequencies",
    "bath_couplings",
    "augment_with_baths",
    "assert_positive_definite",
]


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class OpenEnds(str, enum.Enum):
    """On-site coefficient of the two end sites of an open chain.

    ``SPRING`` truncates ``sum q_k^2 + c sum (q_k - q_{k+1})^2`` (ends get
    ``1 + c``); ``UNIFORM`` keeps ``1 + 2c`` on every site.
    """

    SPRING = "spring"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class ChainSpec:
    n_sites: int
    coupling: float
    boundary: Boundary = Boundary.PERIODIC
    open_ends: OpenEnds = OpenEnds.SPRING

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "open_ends", OpenEnds(self.open_ends))
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if not np.isfinite(self.coupling) or self.coupling < 0:
            raise ValueError(f"coupling must be finite and >= 0, got {self.coupling}")

    def with_coupling(self, c: float) -> "ChainSpec":
        return ChainSpec(self.n_sites, c, self.boundary, self.open_ends)


@dataclass(frozen=True)
class BathSpec:
    """Discrete Ohmic bath attached to every chain site.

    Parameters
    ----------
    modes_per_oscillator : int
        Number ``M`` of bath modes per site; ``0`` disables the bath.
    cutoff : float
        Cut-off frequency ``Lambda``; mode ``i`` has frequency ``i*Lambda/M``.
    coupling : float
        Dimensionless system-bath coupling ``zeta``.
    temperature : float
        Dimensionless temperature ``k_B T / (hbar omega)`` of the initial
        Gibbs state.
    """

    modes_per_oscillator: int
    cutoff: float = 5.0
    coupling: float = 0.0
    temperature: float = 0.0

    def __post_init__(self):
        if int(self.modes_per_oscillator) != self.modes_per_oscillator or self.modes_per_oscillator < 0:
            raise ValueError("modes_per_oscillator must be a non-negative integer")
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be > 0, got {self.cutoff}")
        if not self.coupling >= 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")

    @property
    def recurrence_time(self) -> float:
        """Revival time ``2 pi M / Lambda`` of the evenly spaced bath spectrum."""
        return 2 * np.pi * self.modes_per_oscillator / self.cutoff


def assert_positive_definite(V: np.ndarray, what: str = "potential") -> None:
    """Raise :class:`UnstablePotentialError` unless ``V`` is positive definite."""
    try:
        np.linalg.cholesky(V)
    except np.linalg.LinAlgError:
        lam_min = float(np.linalg.eigvalsh(V)[0])
        raise UnstablePotentialError(
            f"unstable {what}: smallest eigenvalue {lam_min:.6g} <= 0"
        ) from None


def build_potential(spec: ChainSpec, c_value: float | None = None) -> np.ndarray:
    """Potential matrix of the chain at coupling ``c_value``.

    Bonds are summed as ``c (q_k - q_{k+1})^2``, so on a periodic chain of two
    sites both bonds join the same pair and the off-diagonal entry is ``-2c``.
    """
    c = spec.coupling if c_value is None else float(c_value)
    if not c >= 0:
        raise ValueError(f"coupling must be >= 0, got {c}")
    n = spec.n_sites
    V = np.eye(n)
    n_bonds = n if spec.boundary is Boundary.PERIODIC else n - 1
    for k in range(n_bonds):
        j = (k + 1) % n
        V[k, k] += c
        V[j, j] += c
        V[k, j] -= c
        V[j, k] -= c
    if spec.boundary is Boundary.OPEN and spec.open_ends is OpenEnds.UNIFORM:
        V[0, 0] += c
        V[-1, -1] += c
    assert_positive_definite(V)
    return V


def dispersion(spec: ChainSpec, mode_index: int) -> float:
    """Normal-mode frequency ``sqrt(1 + 4c sin^2(pi k / N))`` of a periodic chain."""
    if spec.boundary is not Boundary.PERIODIC:
        raise NotImplementedError("closed-form dispersion exists only for periodic chains")
    n = spec.n_sites
    if not 1 <= mode_index <= n:
        raise ValueError(f"mode_index must lie in 1..{n}")
    return float(np.sqrt(1 + 4 * spec.coupling * np.sin(np.pi * mode_index / n) ** 2))


def bath_frequencies(bath: BathSpec) -> np.ndarray:
    M = bath.modes_per_oscillator
    return np.arange(1, M + 1) * bath.cutoff / M


def bath_couplings(bath: BathSpec) -> np.ndarray:
    """Couplings ``zeta * w_i`` of a site coordinate to its ``i``-th bath mode."""
    return bath.coupling * bath_frequencies(bath)


def augment_with_baths(V_sys: np.ndarray, bath: BathSpec) -> np.ndarray:
    """Potential of the chain plus ``M`` local bath modes per site.

    Ordering: the ``N`` chain coordinates first, then the baths site by site
    (site ``j`` owns indices ``N + j*M ... N + (j+1)*M - 1``).
    """
    V_sys = np.asarray(V_sys, dtype=float)
    M = bath.modes_per_oscillator
    if M == 0:
        return V_sys.copy()
    n = V_sys.shape[0]
    w = bath_frequencies(bath)
    g = bath_couplings(bath)
    dim = n * (M + 1)
    V = np.zeros((dim, dim))
    V[:n, :n] = V_sys
    for j in range(n):
        idx = n + j * M + np.arange(M)
        V[idx, idx] = w**2
        V[j, idx] = g
        V[idx, j] = g
    assert_positive_definite(V, "augmented potential")
    return V
