"""Exception hierarchy. Each class carries the CLI exit code it maps to."""
from typing import Optional


class VoicePdError(Exception):
    exit_code: int = 3


class ConfigError(VoicePdError):
    exit_code = 1


class DataError(VoicePdError):
    exit_code = 2


class AudioReadError(DataError):
    """File missing, unreadable or truncated."""


class AudioDecodeError(DataError):
    """Container readable but the sample encoding is not supported."""

    def __init__(self, path: str, format_tag: str) -> None:
        super().__init__(f"{path}: unsupported WAV encoding ({format_tag})")
        self.path = path
        self.format_tag = format_tag


class FeatureExtractionError(DataError):
    """A segment cannot produce a feature vector; callers skip the row."""


class EmptyTrackError(FeatureExtractionError):
    pass


class InsufficientCyclesError(FeatureExtractionError):
    def __init__(self, variant: str, required: int, actual: int, detail: Optional[str] = None) -> None:
        message = f"{variant}: needs at least {required} cycles, got {actual}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.variant = variant
        self.required = required
        self.actual = actual


class FitError(DataError):
    pass


class GridSearchError(DataError):
    pass


class ReportError(DataError):
    pass


class PreconditionError(VoicePdError, ValueError):
    exit_code = 3


class FilterbankError(PreconditionError):
    pass


class DimensionMismatchError(PreconditionError):
    pass
