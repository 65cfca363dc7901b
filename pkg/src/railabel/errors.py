"""Domain error types.

Every error carries a stable machine-readable ``code``. The HTTP layer maps
any of these to a JSON body ``{"code": ..., "message": ...}`` with the status
given by ``http_status``; other callers (CLI, replay client) can switch on
``code`` without parsing the message text.
"""

from __future__ import annotations


class RailabelError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "error"
    http_status = 400

    def __init__(self, message: str | None = None):
        super().__init__(message if message is not None else self.code)

    @property
    def message(self) -> str:
        return str(self)


class InvalidGeo(RailabelError):
    code = "invalid_geo"


class InvalidTimestamp(RailabelError):
    code = "invalid_timestamp"


class InvalidInterval(RailabelError):
    code = "invalid_interval"


class NotFound(RailabelError):
    code = "not_found"
    http_status = 404


class DuplicateLabel(RailabelError):
    code = "duplicate_label"
    http_status = 409


class EmptyName(RailabelError):
    code = "empty_name"


class NameTooLong(RailabelError):
    code = "name_too_long"


class ContextMismatch(RailabelError):
    code = "context_mismatch"


class EmptyDraft(RailabelError):
    code = "empty_draft"


class StorageFailure(RailabelError):
    code = "storage_failure"
    http_status = 500


class DuplicateParticipant(RailabelError):
    code = "duplicate_participant"
    http_status = 409


class RoundClosed(RailabelError):
    code = "round_closed"
    http_status = 409


class RoundsOpen(RailabelError):
    code = "rounds_open"
    http_status = 409


class BadLength(RailabelError):
    code = "bad_length"


class OutOfRange(RailabelError):
    code = "out_of_range"


class BadDefinition(RailabelError):
    code = "bad_definition"


class LengthMismatch(RailabelError):
    code = "length_mismatch"


class TooShort(RailabelError):
    code = "too_short"


class ConstantInput(RailabelError):
    code = "constant_input"


class InsufficientData(RailabelError):
    code = "insufficient_data"


class InvalidCredentials(RailabelError):
    code = "invalid_credentials"
    http_status = 401


class Unauthorized(RailabelError):
    code = "unauthorized"
    http_status = 401


class Forbidden(RailabelError):
    code = "forbidden"
    http_status = 403


class InvalidRequest(RailabelError):
    code = "invalid_request"


class ScenarioParseError(RailabelError):
    code = "scenario_parse_error"


class ServiceUnreachable(RailabelError):
    code = "service_unreachable"
