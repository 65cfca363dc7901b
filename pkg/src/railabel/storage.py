"""Append-only JSON-lines persistence.

The whole service persists through a single log file. Each line is one JSON
object with exactly the envelope fields::

    {"kind": ..., "event_id": ..., "external_key": ..., "payload": ...,
     "recorded_at": ...}

``kind`` names the record type, ``event_id`` is the id of the entity the
record creates or amends, ``external_key`` is the caller-supplied idempotency
key for ingested events (null for everything else), ``payload`` carries the
type-specific fields and ``recorded_at`` is the UTC wall-clock write time.

In-memory state is a pure projection of the log: stores register an applier
per kind and the service replays the file through them at startup. Nothing
is ever rewritten or deleted.

Durability contract: :meth:`AppendLog.append` returns only after the encoded
line has been flushed and fsynced, so every acknowledged mutation survives a
process kill. A crash half way through a write leaves a torn final line; the
replay path detects it, drops it and truncates the file back to the last
complete record. A torn or invalid line anywhere *before* the end means the
file was damaged by something other than a crash mid-append, and replay
refuses to start rather than silently skipping records.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator

from .errors import StorageFailure
from .timeutil import to_iso, utcnow

ENVELOPE_FIELDS = ("kind", "event_id", "external_key", "payload", "recorded_at")


@dataclass(frozen=True)
class LogRecord:
    kind: str
    event_id: str
    external_key: str | None
    payload: dict[str, Any]
    recorded_at: str

    def as_line(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "event_id": self.event_id,
                "external_key": self.external_key,
                "payload": self.payload,
                "recorded_at": self.recorded_at,
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )


def _decode_line(raw: bytes) -> LogRecord | None:
    """Decode one log line, or return None if it is not a valid record."""
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return None
    if not isinstance(obj, dict) or set(obj) != set(ENVELOPE_FIELDS):
        return None
    if not isinstance(obj["payload"], dict):
        return None
    return LogRecord(
        kind=obj["kind"],
        event_id=obj["event_id"],
        external_key=obj["external_key"],
        payload=obj["payload"],
        recorded_at=obj["recorded_at"],
    )


def read_log(path: Path | str) -> Iterator[LogRecord]:
    """Iterate records from a log file without taking ownership of it.

    Read-only consumers (the export command, tests) use this. A torn final
    line is skipped silently; damage earlier in the file raises
    :class:`StorageFailure`.
    """
    path = Path(path)
    if not path.exists():
        return
    data = path.read_bytes()
    if not data:
        return
    lines = data.split(b"\n")
    complete, tail = lines[:-1], lines[-1]
    for i, raw in enumerate(complete):
        record = _decode_line(raw)
        if record is None:
            if i == len(complete) - 1 and not tail:
                # newline-terminated garbage at the very end: still a torn
                # tail as far as recovery is concerned
                return
            raise StorageFailure(f"corrupt log record at line {i + 1} of {path}")
        yield record
    # a non-empty tail is a torn write; callers with write access may truncate


class AppendLog:
    """Single-writer append-only log over one JSON-lines file.

    All mutating operations across the service serialize on
    :attr:`mutation_lock`; stores take it around their check-then-append
    sequences so validation, the disk write and the in-memory apply are one
    atomic step with respect to other writers.
    """

    def __init__(self, path: Path | str, fsync: bool = True):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.mutation_lock = threading.RLock()
        self._fsync = fsync
        self._write_hook: Callable[[Any, bytes], None] | None = None
        self._file = open(self.path, "ab")
        self._file.seek(0, os.SEEK_END)

    def set_write_hook(self, hook: Callable[[Any, bytes], None] | None) -> None:
        """Install a fault-injection hook that replaces the raw file write.

        Test-only. The hook receives the open file object and the encoded
        line; it may write nothing, write a prefix of the bytes, or raise.
        """
        self._write_hook = hook

    def replay(self) -> Iterator[LogRecord]:
        """Yield every complete record, healing a torn tail if present.

        Must be called before the first append. If the file ends in a
        partial line the file is truncated back to the last complete record
        so the next append starts on a clean boundary.
        """
        with self.mutation_lock:
            size = self.path.stat().st_size
            if size == 0:
                return
            with open(self.path, "rb") as f:
                data = f.read()
            good_end = data.rfind(b"\n") + 1  # 0 if no newline at all
            lines = data[:good_end].split(b"\n")[:-1] if good_end else []
            records = []
            for i, raw in enumerate(lines):
                record = _decode_line(raw)
                if record is None:
                    if i == len(lines) - 1:
                        # newline-terminated torn tail
                        good_end = sum(len(l) + 1 for l in lines[:-1])
                        break
                    raise StorageFailure(
                        f"corrupt log record at line {i + 1} of {self.path}"
                    )
                records.append(record)
            if good_end < size:
                self._file.truncate(good_end)
                self._file.seek(0, os.SEEK_END)
        yield from records

    def append(
        self,
        kind: str,
        event_id: str,
        external_key: str | None,
        payload: dict[str, Any],
    ) -> LogRecord:
        """Write one record durably. Raises StorageFailure and leaves the
        file on a clean record boundary if the write cannot complete."""
        record = LogRecord(
            kind=kind,
            event_id=event_id,
            external_key=external_key,
            payload=payload,
            recorded_at=to_iso(utcnow()),
        )
        data = (record.as_line() + "\n").encode("utf-8")
        with self.mutation_lock:
            offset = self._file.tell()
            try:
                if self._write_hook is not None:
                    self._write_hook(self._file, data)
                else:
                    self._file.write(data)
                self._file.flush()
                if self._fsync:
                    os.fsync(self._file.fileno())
            except StorageFailure:
                self._rewind(offset)
                raise
            except Exception as exc:
                self._rewind(offset)
                raise StorageFailure(f"log append failed: {exc}") from exc
        return record

    def _rewind(self, offset: int) -> None:
        try:
            self._file.truncate(offset)
            self._file.seek(offset)
        except OSError:
            # cannot heal in place; a restart will drop the torn tail
            pass

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> "AppendLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
