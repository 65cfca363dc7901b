"""Timestamp parsing and formatting helpers.

All timestamps are stored and compared as timezone-aware UTC datetimes.
Rendering in a local timezone is a presentation concern and happens in
clients, driven by the ``display_timezone`` config value.
"""

from __future__ import annotations

from datetime import datetime, timezone

from .errors import InvalidTimestamp


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def parse_timestamp(value: object) -> datetime:
    """Parse ``value`` into an aware UTC datetime.

    Accepts aware or naive datetimes (naive is taken as UTC), ISO-8601
    strings including a trailing ``Z``, and epoch seconds as int or float.
    Raises :class:`InvalidTimestamp` for anything else.
    """
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, bool):
        raise InvalidTimestamp(f"not a timestamp: {value!r}")
    elif isinstance(value, (int, float)):
        try:
            dt = datetime.fromtimestamp(value, tz=timezone.utc)
        except (OverflowError, OSError, ValueError) as exc:
            raise InvalidTimestamp(f"epoch value out of range: {value!r}") from exc
    elif isinstance(value, str):
        text = value.strip()
        if not text:
            raise InvalidTimestamp("empty timestamp")
        if text[-1] in ("Z", "z"):
            # datetime.fromisoformat on 3.10 does not accept the Z suffix
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            try:
                return parse_timestamp(float(text))
            except (InvalidTimestamp, ValueError):
                raise InvalidTimestamp(f"unparsable timestamp: {value!r}") from None
    else:
        raise InvalidTimestamp(f"not a timestamp: {value!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def to_iso(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat()
