"""Exception hierarchy shared by every module of the package."""


class QdynError(Exception):
    """Base class for all errors raised by qdyn."""


class StructuralError(QdynError, ValueError):
    """Shapes, dims or object kinds are inconsistent."""


class DegenerateInputError(QdynError, ValueError):
    """Input is valid structurally but numerically degenerate (zero norm, singular system, ...)."""


class UnsupportedModeError(QdynError, ValueError):
    """The requested option combination is not supported for this input."""


class NumericalConsistencyError(QdynError, ArithmeticError):
    """A quantity that must be real/positive came out otherwise beyond tolerance."""


class SolverConvergenceError(QdynError, RuntimeError):
    """The ODE integrator could not reach the requested accuracy.

    Attributes
    ----------
    t : float
        Time at which integration stopped.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ExpressionSyntaxError(QdynError, ValueError):
    """Malformed coefficient expression; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExpressionEvaluationError(QdynError, ValueError):
    """Evaluation of a parsed expression failed (unbound name, division by zero)."""

    def __init__(self, message, name=None):
        super().__init__(message)
        self.name = name


class DataFormatError(QdynError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None, position=None):
        super().__init__(message)
        self.line = line
        self.position = position


class IncompatibleFileError(DataFormatError):
    """File is not a qdyn binary container of a supported version."""


class DataLossError(QdynError, ValueError):
    """Writing the data in the requested format would discard information."""
