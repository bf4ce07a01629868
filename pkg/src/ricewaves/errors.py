"""Exception hierarchy shared by the analytic and Monte Carlo modules."""


class RiceError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RiceError, ValueError):
    """An argument lies outside the domain of a formula."""


class DegeneracyError(DomainError):
    """A covariance structure is singular where the formula needs it regular."""


class QuadratureError(RiceError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Attributes
    ----------
    value : float
        Best estimate available when the integrator gave up.
    err_est : float
        Error estimate attached to ``value``.
    """

    def __init__(self, message, value=float("nan"), err_est=float("inf")):
        super().__init__(message)
        self.value = value
        self.err_est = err_est


class ConsistencyError(RiceError, ArithmeticError):
    """Two routes to the same quantity disagree beyond tolerance."""
