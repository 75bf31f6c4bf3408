"""Exception hierarchy shared by all modules."""


class ZMCError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(ZMCError, ValueError):
    """Invalid parameters or configuration."""


class NumericalError(ZMCError):
    """A computation failed for numerical or geometric reasons."""


class DegenerateMetric(NumericalError):
    pass


class NotTimelike(NumericalError):
    pass


class FrameNotNormal(NumericalError):
    pass


class FlatPoint(NumericalError):
    pass


class NotZMC(NumericalError):
    pass


class NotSemiCanonical(NumericalError):
    pass


class TurningPoint(NumericalError):
    """Raised by the meridian ODE when f' reaches zero.

    The trajectory integrated up to the turning point is kept in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class GridTooSmall(ValidationError):
    pass


class ZeroModulus(NumericalError):
    pass


class CFLViolation(NumericalError):
    pass


class Blowup(NumericalError):
    pass


class NoConvergence(NumericalError):
    """Relaxation did not reach the tolerance; partial fields are attached."""

    def __init__(self, message, X=None, Y=None, report=None):
        super().__init__(message)
        self.X = X
        self.Y = Y
        self.report = report


class DriftExceeded(NumericalError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class FileFormatError(ValidationError):
    pass
