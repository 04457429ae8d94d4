"""Exception types shared by the toolkit."""


class DomainError(ValueError):
    """Input lies where a formula is singular or undefined (horizons, r <= 0, s = 0)."""


class PreconditionError(ValueError):
    """Input violates an operation's stated precondition.

    ``residual`` carries the offending shell residual when one is meaningful.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StepFailure(RuntimeError):
    """The adaptive stepper could not meet its tolerances."""


class GridTooSmallError(ValueError):
    """Eigenfunctions do not decay inside the finite-difference box."""
