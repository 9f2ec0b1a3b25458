"""Exception and warning types shared across the package."""


class DangalignError(Exception):
    """Base class for package errors."""


class DataError(DangalignError):
    """Malformed or inconsistent input data (exit code 2)."""


class ConfigError(DangalignError):
    """Invalid configuration or command usage (exit code 1)."""


class NumericError(DangalignError):
    """Non-finite values encountered during optimization (exit code 3)."""


class DataWarning(UserWarning):
    """Recoverable data issue, e.g. duplicate triples in an input file."""
