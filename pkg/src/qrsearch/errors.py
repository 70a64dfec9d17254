"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A sampler or objective parameter is outside its valid range."""


class ValidationError(ValueError):
    """Input data (spaces, configs, point sets) failed validation."""


class UsageError(ValueError):
    """An operation was called in a way its contract does not allow."""
