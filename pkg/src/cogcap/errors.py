"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class ConfigError(ValueError):
    """A configuration value violates a model precondition."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DegenerateInputError(ValueError):
    """Conditioning on a zero-probability event."""


class UnsupportedCombinationError(ValueError):
    """The requested estimator has no closed-form statistics."""


class NumericalConsistencyError(ArithmeticError):
    pass


class InfeasibleError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Queue is unstable: arrivals exceed the mean service rate."""
