"""Exception types shared across the package."""


class FinslerError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FinslerError, ValueError):
    """A sample point lies outside the smooth domain of an expression.

    ``expr`` carries the printed offending subexpression when known.
    """

    def __init__(self, message, expr=None):
        self.expr = expr
        if expr is not None:
            message = f"{message} in '{expr}'"
        super().__init__(message)


class SingularMatrix(FinslerError, ArithmeticError):
    """Fundamental tensor is not positive definite (or not invertible)."""


class DeltaNearZero(FinslerError, ArithmeticError):
    """The product-function discriminant vanishes at the sample."""


class DimensionError(FinslerError, ValueError):
    pass


class SamplerExhausted(FinslerError, RuntimeError):
    """Too many consecutive rejected samples."""


class ConfigError(FinslerError, ValueError):
    pass
