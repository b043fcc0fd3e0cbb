"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the region where an operation is defined."""


class SingularityError(DomainError):
    """Input is on (or numerically too close to) a singular set of the fields."""
