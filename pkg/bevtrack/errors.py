from typing import Any, Dict, Optional


class BevTrackError(Exception):
    """Base exception for tracker errors."""
    def __init__(self, message: str, error_code: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        super().__init__(self.message)


class ConfigError(BevTrackError):
    """Invalid configuration, unknown suite or unknown mode."""


class LogFormatError(BevTrackError):
    """Malformed JSON-lines log."""


class ShapeError(BevTrackError):
    """Tensor or vector shapes do not chain."""


class NumericalError(BevTrackError):
    """A non-finite value appeared where finite values are required."""


class AttentionError(BevTrackError):
    """A live query row has no unmasked key."""


class FrameOrderError(BevTrackError):
    """Frames fed to a tracker are not strictly increasing."""


class DatasetError(BevTrackError):
    """Training data is missing or empty."""


class HorizonError(BevTrackError):
    """Evaluation horizon is longer than the forecasts."""
