"""Exception hierarchy shared by every trilevel module."""


class TrilevelError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameters(TrilevelError, ValueError):
    pass


class OrderingViolation(InvalidParameters):
    pass


class ForbiddenCoupling(InvalidParameters):
    pass


class NonPositiveAtoms(InvalidParameters):
    pass


class NonFiniteInput(InvalidParameters):
    pass


class DegenerateGap(InvalidParameters):
    pass


class NoConvergence(TrilevelError):
    """Local refinement failed to reach the stationarity tolerance."""

    def __init__(self, message, best=None, grad_norm=None):
        super().__init__(message)
        self.best = best
        self.grad_norm = grad_norm


class NoCrossing(TrilevelError):
    pass


class AmbiguousClassification(TrilevelError):
    def __init__(self, message, jump=None):
        super().__init__(message)
        self.jump = jump


class DimensionMismatch(TrilevelError, ValueError):
    pass


class EigenFailure(TrilevelError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CapReached(TrilevelError):
    """Sector search hit the hard cap while the minimum was still improving.

    The unconverged result is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InvalidSector(TrilevelError, ValueError):
    pass


class IncompleteGrid(TrilevelError, ValueError):
    pass
