"""Exception types raised by the library."""


class TangentAccelError(Exception):
    """Base class for all library errors."""


class ManifoldError(TangentAccelError, ValueError):
    """A point or tangent vector violates the manifold's defining constraints."""


class AssumptionViolation(TangentAccelError, ValueError):
    """The tolerance ``eps`` is too loose for the supplied constants."""


class InvariantBreach(TangentAccelError, RuntimeError):
    """A runtime-checked guarantee of the inner loop failed."""

    def __init__(self, check, message, witness=None):
        super().__init__(f"[{check}] {message}")
        self.check = check
        self.witness = witness


class BudgetExceeded(TangentAccelError, RuntimeError):
    """The iteration counter went past its theoretical bound."""


class GiveUp(TangentAccelError, RuntimeError):
    """Backtracking exhausted its guesses without finding a critical point."""

    def __init__(self, message, attempts=None):
        super().__init__(message)
        self.attempts = attempts or []


class ConfigError(TangentAccelError, ValueError):
    """Invalid experiment configuration."""
