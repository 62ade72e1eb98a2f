"""Exception types shared across the package."""


class RandcritError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDegreeError(RandcritError, ValueError):
    """Polynomial degree outside the supported range."""


class VarianceOverflowError(RandcritError, OverflowError):
    """Ensemble variance not representable in double precision."""


class DegenerateConditioningError(RandcritError, ZeroDivisionError):
    """Conditioning kernel requested at a point where G(z, zbar) = 0."""


class QuadratureError(RandcritError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class DomainError(RandcritError, ValueError):
    """Moduli point or region outside the model's admissible domain."""


class ContractViolationError(RandcritError, RuntimeError):
    """An operation was called outside its stated precondition."""
