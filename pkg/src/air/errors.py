"""Exception hierarchy shared across the package."""

from __future__ import annotations


class AirError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AirError):
    """An invariant was violated; the message names the offending field."""


class SchemaError(ValidationError):
    """A persisted artifact does not match the expected schema."""


class PersistenceError(AirError):
    """Reading or writing an artifact failed; carries the path involved."""

    def __init__(self, message: str, path: str | None = None) -> None:
        super().__init__(message if path is None else f"{message}: {path}")
        self.path = path


class InsufficientDataError(AirError):
    """A class has too few usable images for the requested split."""


class PromptParseError(AirError):
    """Prompt text failed to parse; carries the character offset."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class BackendError(AirError):
    """A model backend call failed; carries endpoint and HTTP status when known."""

    def __init__(self, message: str, endpoint: str | None = None, status: int | None = None) -> None:
        detail = message
        if endpoint is not None:
            detail += f" [endpoint={endpoint}]"
        if status is not None:
            detail += f" [status={status}]"
        super().__init__(detail)
        self.endpoint = endpoint
        self.status = status


class ConflictError(AirError):
    """A mutating operation raced with another writer or an active job."""


class NotFoundError(AirError):
    """A referenced dataset, model, or job does not exist."""


class DivergenceError(AirError):
    """Training produced a non-finite loss; carries the epoch it happened in."""

    def __init__(self, message: str, epoch: int) -> None:
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch
