"""Exception types shared across the package."""

from __future__ import annotations


class EyerofeedbackError(Exception):
    """Base class for all package-specific errors."""


class InvalidSampleError(EyerofeedbackError):
    """A gaze sample flagged invalid was used where a valid one is required."""


class TimingError(EyerofeedbackError):
    """A timestamp went backwards where monotonic order is required."""


class ProtocolError(EyerofeedbackError):
    """Malformed bytes on the device wire."""

    def __init__(self, message: str, raw: bytes = b"") -> None:
        super().__init__(message)
        self.raw = raw


class DeviceTimeoutError(EyerofeedbackError):
    """The device did not answer within the allotted time."""


class LogOrderError(EyerofeedbackError):
    """An append would violate the non-decreasing timestamp rule."""


class ReplayError(EyerofeedbackError):
    """A log file could not be replayed."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        super().__init__(message)
        self.line_number = line_number


class DegenerateDataError(EyerofeedbackError):
    """A statistic is undefined on this input (zero variance, empty cell...)."""


class ConfigError(EyerofeedbackError):
    """Invalid configuration values (agent parameters, CLI settings)."""
