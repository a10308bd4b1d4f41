"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ResolutionError(ValueError):
    """A grid or band limit is too coarse for the requested accuracy."""


class QuadratureFailure(ArithmeticError):
    """A quadrature produced a non-finite value."""


class MembershipError(ValueError):
    """Input does not belong to the admissible class (e.g. u must be positive)."""
