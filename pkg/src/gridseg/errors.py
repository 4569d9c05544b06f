"""Exception types shared across the package."""


class MalformedFileError(ValueError):
    """Input file does not match its expected binary layout."""


class ContractViolationError(ValueError):
    """An operation was called with arguments violating its preconditions."""


class FitFailureError(RuntimeError):
    """Robust model fitting could not produce a valid model."""


class ConfigError(ValueError):
    """Invalid, unknown, or inconsistent configuration."""
