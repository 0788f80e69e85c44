"""Entanglement generation and transport in quenched harmonic oscillator chains.

Gaussian states are represented by real covariance matrices in (q..., p...)
block ordering, normalized so that the vacuum is the identity.
"""

__version__ = "0.1.0"
