"""Exception hierarchy shared by every module."""

from __future__ import annotations


class TmForecastError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(TmForecastError, ValueError):
    pass


class ConfigurationError(TmForecastError, ValueError):
    pass


class DegenerateScaleError(TmForecastError, ValueError):
    pass


class InvalidModelError(TmForecastError, ValueError):
    pass


class InsufficientDataError(TmForecastError, ValueError):
    pass


class DegenerateFitError(TmForecastError, ValueError):
    pass


class DataError(TmForecastError, ValueError):
    pass


class MetricError(TmForecastError, ValueError):
    pass


class ParseError(TmForecastError, ValueError):
    """Malformed input file; ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class TrainingDivergedError(TmForecastError, RuntimeError):
    def __init__(self, epoch: int, loss: float = float("nan")):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
