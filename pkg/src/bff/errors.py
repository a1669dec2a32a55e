"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or produced an unusable value."""


class ContractError(ValueError):
    """An operation was invoked on objects that violate its preconditions."""
