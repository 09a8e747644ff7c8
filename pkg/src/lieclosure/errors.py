"""Exception and warning types shared across the package."""


class LieClosureError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(LieClosureError, ValueError):
    """Operands or arguments violate a precondition (shape, backend, length)."""


class CapacityError(LieClosureError):
    """A configured size limit (basis cap, dense expansion limit) was exceeded."""


class NumericalDegeneracyError(LieClosureError, ArithmeticError):
    """The Gram matrix update hit a non-positive Schur complement."""

    def __init__(self, message, index=None, schur=None):
        super().__init__(message)
        self.index = index
        self.schur = schur


class ClosureTimeout(LieClosureError, TimeoutError):
    """A closure run exceeded its wall-clock budget."""


class PauliParseError(InvalidInputError):
    """Malformed Pauli-sum text. Carries 1-based line and column."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ConditioningWarning(RuntimeWarning):
    """An independence test landed close to the tolerance or the Gram matrix drifted."""
