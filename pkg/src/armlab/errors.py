"""Shared exception types."""


class ConfigError(ValueError):
    """A configuration is internally inconsistent or mismatched with its input."""


class UsageError(ValueError):
    """An operation was called outside its contract."""


class SchemaError(RuntimeError):
    """Serialized data does not match the expected schema."""


class CorruptFileError(RuntimeError):
    """A stored file failed validation (bad magic, truncation, checksum)."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (at byte offset {offset})")
        self.offset = offset


class NonFiniteGradientError(RuntimeError):
    """A parameter gradient contained NaN or Inf; the optimizer step was aborted."""

    def __init__(self, name: str):
        super().__init__(f"non-finite gradient for parameter '{name}'")
        self.param_name = name


class ExpertFailure(RuntimeError):
    """A scripted expert hit an unreachable waypoint; the episode is discarded."""


class TrainDivergence(RuntimeError):
    """Training produced a non-finite loss."""
