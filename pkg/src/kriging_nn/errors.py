"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input: wrong dimension, empty data, invalid parameter."""


class NumericalError(ArithmeticError):
    """A factorization failed even at the jitter cap."""
