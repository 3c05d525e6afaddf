"""Exception types raised by the solver library."""


class FittedBVPError(Exception):
    """Base class for all library errors."""


class ParameterError(FittedBVPError, ValueError):
    """Mesh or scheme parameters outside their admissible range."""


class DegenerateMeshError(FittedBVPError):
    """A constructed mesh has a non-positive step."""


class SingularMatrixError(FittedBVPError, ArithmeticError):
    """A pivot of the tridiagonal elimination vanished."""


class NonConvergenceError(FittedBVPError):
    """Newton's method did not meet its stopping rule within ``max_iter`` steps.

    Attributes:
        history: list of ``(step_norm, residual_norm)`` pairs, one per iteration.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class MeshMismatchError(FittedBVPError):
    """Coarse mesh nodes do not coincide with the reference mesh nodes."""


class MissingExactError(FittedBVPError):
    """The problem has no closed-form solution to compare against."""
