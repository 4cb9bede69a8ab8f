"""Exception hierarchy shared by all modules."""


class QssaLabError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(QssaLabError, ValueError):
    """Malformed or out-of-domain input (bad parameters, unsupported family)."""


class NumericalError(QssaLabError, ArithmeticError):
    """A numerical procedure failed (singular matrix, step underflow, ...)."""


class NormalHyperbolicityError(NumericalError):
    """``Df P`` is singular at the point where a projection was requested."""


class IntegrationError(NumericalError):
    """The integrator could not reach the requested end point."""


class ConvergenceError(NumericalError):
    """An iterative procedure did not reach its target."""


class JacobianMismatchError(NumericalError):
    """Closed-form and finite-difference Jacobians disagree."""
