"""Exception types raised across the package."""


class QPTonguesError(Exception):
    """Base class for all package errors."""


class InvalidParameter(QPTonguesError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class InvalidDomain(QPTonguesError, ValueError):
    """A closed-form expression was evaluated outside its real domain."""


class DegenerateSlowTime(QPTonguesError, ValueError):
    """Slow time tau = eps*Delta*Omega*t collapses because Delta == 0."""


class NonFiniteState(QPTonguesError, ArithmeticError):
    """The integrated state picked up a NaN or Inf.

    The partial trajectory (up to and including the offending step) is kept
    on the exception so callers can still classify it as divergent.
    """

    def __init__(self, step, trajectory=None):
        super().__init__(f"non-finite state at step {step}")
        self.step = step
        self.trajectory = trajectory


class EmptyTrajectory(QPTonguesError, ValueError):
    """A trajectory carries no samples to classify."""


class SpecMismatch(QPTonguesError, ValueError):
    """Two grids do not share axes and resolution."""


class PrecisionExhausted(QPTonguesError, ArithmeticError):
    """A continued-fraction expansion ran past the precision of its input."""

    def __init__(self, requested, convergents):
        super().__init__(
            f"only {len(convergents)} reliable convergent(s) available, "
            f"{requested} requested"
        )
        self.requested = requested
        self.convergents = list(convergents)


class ConfigError(QPTonguesError, ValueError):
    """A run configuration document failed validation."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
