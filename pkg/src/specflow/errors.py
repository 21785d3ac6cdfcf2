"""Exception types raised by the estimation pipeline."""


class SpecflowError(Exception):
    """Base class for all package errors."""


class CubeFormatError(SpecflowError, ValueError):
    """Malformed or unrecognised cube / velocity file."""


class CubeSizeError(SpecflowError, ValueError):
    """Header dimensions inconsistent with the file payload."""


class EstimationInputError(SpecflowError, ValueError):
    """Input data cannot support an estimate (e.g. no usable frame pair)."""


class DegenerateDataError(SpecflowError):
    """The normal system is singular or numerically ill-conditioned.

    Attributes
    ----------
    cause : str
        Short name of the deficiency, e.g. ``"no spatial gradient"``.
    condition : float
        Condition estimate of the Hermitian system (``inf`` when the
        factorisation failed outright).
    """

    def __init__(self, message, cause="ill-conditioned", condition=float("inf")):
        super().__init__(message)
        self.cause = cause
        self.condition = condition


class ConvergenceError(SpecflowError):
    """Iterative solver did not reach the requested tolerance.

    Carries the best iterate (solution vector, unflipped ordering) and its
    relative residual so callers can decide whether to use it anyway.
    """

    def __init__(self, message, best=None, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations
