class InvalidInputError(ValueError):
    """Raised for dimension mismatches and out-of-domain arguments."""


class NumericalError(ArithmeticError):
    """Raised when a linear-algebra step breaks down."""
