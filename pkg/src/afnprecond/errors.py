"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Invalid argument (bad size, index out of range, inconsistent shapes)."""


class SizeError(ArgumentError):
    """Problem instance too large for the requested dense or exhaustive operation."""


class NumericError(ArithmeticError):
    """Numerical breakdown during an iterative or dense computation."""


class FactorizationError(NumericError):
    """Cholesky-type factorization failed even after diagonal jitter.

    Attributes
    ----------
    pivot : int or None
        Index of the failing pivot (or FSAI row), if known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ParseError(ValueError):
    """Malformed input file; carries the 1-based line (and column when known)."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column
