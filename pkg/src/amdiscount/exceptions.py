"""Exception types raised by amdiscount."""


class AmdError(Exception):
    """Base class for all amdiscount errors."""


class DomainError(AmdError, ValueError):
    """An input violates a domain invariant (negative reward, lambda <= 0, ...)."""


class UnsupportedScheduleError(AmdError, ValueError):
    """A closed form was requested for a default schedule it does not cover."""


class NoIndifferenceError(AmdError, ArithmeticError):
    """No indifference delay exists inside the searched interval."""


class ConvergenceError(AmdError, RuntimeError):
    """The optimizer did not converge from any start.

    The best iterate found is kept on ``best`` so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
