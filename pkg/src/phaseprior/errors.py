"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations

from pathlib import Path


class PhasePriorError(Exception):
    """Base class for every error raised by phaseprior."""


class DimensionError(PhasePriorError, ValueError):
    """Raised when vector or matrix shapes do not line up."""


class ParameterError(PhasePriorError, ValueError):
    """Raised when a scalar argument lies outside its admissible range."""


class DatasetError(PhasePriorError):
    """Raised when a dataset is too small or otherwise unusable."""


class ParseError(DatasetError):
    """Raised when a data file cannot be parsed.

    ``row`` is 1-based and refers to physical lines of the file.
    """

    def __init__(self, message: str, *, path: Path | str | None = None, row: int | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self.row = row
        location = ""
        if self.path is not None:
            location = f"{self.path}"
        if row is not None:
            location = f"{location}:{row}" if location else f"row {row}"
        super().__init__(f"{location}: {message}" if location else message)


class ConfigError(PhasePriorError):
    """Raised for invalid configuration files, keys or environment values."""


class EstimationError(PhasePriorError):
    """Raised when an empirical constant cannot be estimated from the sample."""


class NumericalError(PhasePriorError):
    """Raised when a computation produces non-finite values."""
