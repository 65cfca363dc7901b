"""Maintenance event ingestion and the in-memory event store.

Two event sources feed the store: the in-cab button press of a train driver
(a ride event with a geo position) and the workshop management system (a
train car visit with an entry/exit interval). Both ingestion paths are
idempotent on a caller-supplied external key, so upstream systems can retry
blindly.

An event's ``labeled`` flag is not persisted. It is derived: an event is
labeled exactly when at least one submitted annotation references it, and
the annotation store flips it while applying annotation records. That keeps
submission a single log append.
"""

from __future__ import annotations

import math
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Iterable

from .errors import (
    InvalidGeo,
    InvalidInterval,
    InvalidRequest,
    InvalidTimestamp,
    NotFound,
)
from .storage import AppendLog, LogRecord
from .timeutil import parse_timestamp, to_iso, utcnow

KIND_RIDE = "ride_event"
KIND_TRAIN_CAR = "train_car_event"

CONTEXT_RAIL = "rail"
CONTEXT_TRAIN_CAR = "train_car"
EVENT_CONTEXTS = (CONTEXT_TRAIN_CAR, CONTEXT_RAIL)


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 position. Construction validates ranges and finiteness."""

    latitude: float
    longitude: float

    def __post_init__(self):
        for name, value in (("latitude", self.latitude), ("longitude", self.longitude)):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise InvalidGeo(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidGeo(f"{name} must be finite, got {value!r}")
        if not -90.0 <= self.latitude <= 90.0:
            raise InvalidGeo(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise InvalidGeo(f"longitude out of range: {self.longitude}")

    def as_dict(self) -> dict:
        return {"latitude": self.latitude, "longitude": self.longitude}


@dataclass
class RideEvent:
    """A driver-reported incident during a ride."""

    event_id: str
    external_key: str
    train_id: str
    occurred_at: datetime
    location: GeoPoint
    labeled: bool = False

    context = CONTEXT_RAIL

    @property
    def event_time(self) -> datetime:
        return self.occurred_at

    @property
    def status(self) -> str:
        return "labeled" if self.labeled else "unlabeled"

    def as_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "context": self.context,
            "external_key": self.external_key,
            "train_id": self.train_id,
            "occurred_at": to_iso(self.occurred_at),
            "location": self.location.as_dict(),
            "status": self.status,
        }


@dataclass
class TrainCarEvent:
    """A workshop visit of one train car."""

    event_id: str
    external_key: str
    train_car_id: str
    entered_at: datetime
    exited_at: datetime
    labeled: bool = False

    context = CONTEXT_TRAIN_CAR

    @property
    def event_time(self) -> datetime:
        return self.entered_at

    @property
    def status(self) -> str:
        return "labeled" if self.labeled else "unlabeled"

    def as_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "context": self.context,
            "external_key": self.external_key,
            "train_car_id": self.train_car_id,
            "entered_at": to_iso(self.entered_at),
            "exited_at": to_iso(self.exited_at),
            "status": self.status,
        }


Event = RideEvent | TrainCarEvent


def _second_precision(dt: datetime) -> datetime:
    return dt.replace(microsecond=0)


class EventStore:
    """Holds all ingested events; persists through an :class:`AppendLog`.

    Idempotency keys are scoped per event kind: the driver app and the
    workshop system generate keys independently, so a key collision across
    the two sources must not alias their events.
    """

    def __init__(
        self,
        log: AppendLog,
        clock_skew_seconds: float = 300.0,
        now: Callable[[], datetime] = utcnow,
    ):
        self._log = log
        self._skew = timedelta(seconds=clock_skew_seconds)
        self._now = now
        self._events: dict[str, Event] = {}
        self._by_key: dict[tuple[str, str], str] = {}

    # -- ingestion ---------------------------------------------------------

    def ingest_button_press(
        self,
        train_id: str,
        occurred_at: object,
        location: GeoPoint,
        external_key: str,
    ) -> tuple[RideEvent, bool]:
        """Record a driver button press. Returns (event, created).

        ``occurred_at`` may not lie in the future beyond the configured
        clock-skew tolerance; device clocks drift, but not that far.
        """
        when = _second_precision(parse_timestamp(occurred_at))
        if not isinstance(location, GeoPoint):
            location = GeoPoint(**location)
        with self._log.mutation_lock:
            existing = self._by_key.get((KIND_RIDE, external_key))
            if existing is not None:
                event = self._events[existing]
                assert isinstance(event, RideEvent)
                return event, False
            if when > self._now() + self._skew:
                raise InvalidTimestamp(
                    f"occurred_at is in the future beyond skew tolerance: {to_iso(when)}"
                )
            event_id = "ev" + uuid.uuid4().hex
            record = self._log.append(
                KIND_RIDE,
                event_id,
                external_key,
                {
                    "train_id": train_id,
                    "occurred_at": to_iso(when),
                    "location": location.as_dict(),
                },
            )
            return self._apply_ride(record), True

    def ingest_workshop_visit(
        self,
        train_car_id: str,
        entered_at: object,
        exited_at: object,
        external_key: str,
    ) -> tuple[TrainCarEvent, bool]:
        """Record a workshop visit. Returns (event, created)."""
        entered = _second_precision(parse_timestamp(entered_at))
        exited = _second_precision(parse_timestamp(exited_at))
        if not entered < exited:
            raise InvalidInterval(
                f"entered_at must precede exited_at ({to_iso(entered)} >= {to_iso(exited)})"
            )
        with self._log.mutation_lock:
            existing = self._by_key.get((KIND_TRAIN_CAR, external_key))
            if existing is not None:
                event = self._events[existing]
                assert isinstance(event, TrainCarEvent)
                return event, False
            event_id = "ev" + uuid.uuid4().hex
            record = self._log.append(
                KIND_TRAIN_CAR,
                event_id,
                external_key,
                {
                    "train_car_id": train_car_id,
                    "entered_at": to_iso(entered),
                    "exited_at": to_iso(exited),
                },
            )
            return self._apply_train_car(record), True

    # -- queries -----------------------------------------------------------

    def list_events(self, context: str, status: str = "all") -> list[Event]:
        """Events of one context, newest first.

        Ties on the event timestamp keep ingestion order (stable sort), so
        paging clients see a reproducible ordering.
        """
        if context not in EVENT_CONTEXTS:
            raise InvalidRequest(f"unknown event context: {context!r}")
        if status not in ("all", "labeled", "unlabeled"):
            raise InvalidRequest(f"unknown status filter: {status!r}")
        selected = [e for e in self._events.values() if e.context == context]
        if status != "all":
            selected = [e for e in selected if e.status == status]
        return sorted(selected, key=lambda e: e.event_time, reverse=True)

    def get_event(self, event_id: str) -> Event:
        try:
            return self._events[event_id]
        except KeyError:
            raise NotFound(f"no such event: {event_id}") from None

    def __len__(self) -> int:
        return len(self._events)

    def all_events(self) -> Iterable[Event]:
        return self._events.values()

    # -- log appliers ------------------------------------------------------

    def mark_labeled(self, event_id: str) -> None:
        self._events[event_id].labeled = True

    def apply(self, record: LogRecord) -> Event:
        if record.kind == KIND_RIDE:
            return self._apply_ride(record)
        if record.kind == KIND_TRAIN_CAR:
            return self._apply_train_car(record)
        raise ValueError(f"not an event record: {record.kind}")

    def _apply_ride(self, record: LogRecord) -> RideEvent:
        p = record.payload
        event = RideEvent(
            event_id=record.event_id,
            external_key=record.external_key,
            train_id=p["train_id"],
            occurred_at=parse_timestamp(p["occurred_at"]),
            location=GeoPoint(**p["location"]),
        )
        self._events[event.event_id] = event
        self._by_key[(KIND_RIDE, event.external_key)] = event.event_id
        return event

    def _apply_train_car(self, record: LogRecord) -> TrainCarEvent:
        p = record.payload
        event = TrainCarEvent(
            event_id=record.event_id,
            external_key=record.external_key,
            train_car_id=p["train_car_id"],
            entered_at=parse_timestamp(p["entered_at"]),
            exited_at=parse_timestamp(p["exited_at"]),
        )
        self._events[event.event_id] = event
        self._by_key[(KIND_TRAIN_CAR, event.external_key)] = event.event_id
        return event
