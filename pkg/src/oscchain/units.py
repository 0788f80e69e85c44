"""Conversion between device parameters and dimensionless simulation units.

Time is measured in units of ``1/omega`` with ``omega = 2 pi f``, so
``hbar omega = h f`` sets the energy scale.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.constants import h as PLANCK, k as BOLTZMANN, pi

__all__ = ["PhysicalParams", "Dimensionless", "to_dimensionless", "from_dimensionless"]


@dataclass(frozen=True)
class PhysicalParams:
    frequency: float  # Hz
    temperature: float  # K
    q_factor: float

    def __post_init__(self):
        for name in ("frequency", "temperature", "q_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class Dimensionless:
    temperature: float  # k_B T / (h f)
    damping_rate: float  # energy decay rate per unit time, 1/Q
    time_unit_seconds: float  # 1 / (2 pi f)


def to_dimensionless(p: PhysicalParams) -> Dimensionless:
    return Dimensionless(
        temperature=BOLTZMANN * p.temperature / (PLANCK * p.frequency),
        damping_rate=1.0 / p.q_factor,
        time_unit_seconds=1.0 / (2 * pi * p.frequency),
    )


def from_dimensionless(d: Dimensionless) -> PhysicalParams:
    frequency = 1.0 / (2 * pi * d.time_unit_seconds)
    return PhysicalParams(
        frequency=frequency,
        temperature=d.temperature * PLANCK * frequency / BOLTZMANN,
        q_factor=1.0 / d.damping_rate,
    )
