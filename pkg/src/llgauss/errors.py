"""Exception hierarchy. The CLI maps these onto exit codes."""


class LLGaussError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DataError(LLGaussError, ValueError):
    """Input data violates a structural requirement (ordering, lengths, PSD)."""

    exit_code = 2


class NotPSDError(DataError):
    pass


class ConfigurationError(LLGaussError, ValueError):
    """A configuration cannot be honoured exactly (e.g. unaligned lag)."""

    exit_code = 3


class ParameterError(ConfigurationError):
    """A scalar parameter is out of its admissible range."""
