"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class OscChainError(Exception):
    exit_code = 1


class ConfigError(OscChainError, ValueError):
    exit_code = 2


class PhysicsValidityError(OscChainError):
    """A state or propagator violated a physical invariant."""

    exit_code = 3


class StepSizeError(PhysicsValidityError):
    """Integrator drift exceeded tolerance; retry with a smaller dt."""


class StabilityError(OscChainError):
    exit_code = 4


class UnstablePotentialError(StabilityError, ValueError):
    """Potential matrix is not positive definite."""


class RecurrenceError(StabilityError):
    """Simulation horizon reaches the recurrence time of a finite bath."""
