"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (config 2, data 3, fit 4,
simulation 5); library callers can catch the base class.
"""


class HurriskError(Exception):
    """Base class for all package errors."""


class ConfigError(HurriskError):
    """Invalid or incomplete configuration."""


class DataError(HurriskError):
    """Malformed or unusable input data."""


class Hurdat2ParseError(DataError):
    """Structural or field-level failure while parsing HURDAT2 text."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class FitError(HurriskError):
    """Maximum-likelihood fit failed to converge or is degenerate."""


class SimulationError(HurriskError):
    """Monte Carlo simulation could not produce a sample."""


class ValidationError(HurriskError):
    """Train/test validation could not be carried out."""
