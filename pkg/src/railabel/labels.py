"""Label taxonomy: flat, per-context, duplicate-safe.

Three labeling contexts exist. ``fault_found`` and ``repair_done`` belong to
the workshop dashboard and hold independent lists; ``rail_event`` belongs to
the rail dashboard. Names are unique within a context under a trim+casefold
comparison, and labels are never deleted or renamed, so a submitted
annotation can always resolve its label ids.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass
from datetime import datetime
from typing import Callable

from . import events as _events
from .errors import DuplicateLabel, EmptyName, InvalidRequest, NameTooLong, NotFound
from .storage import AppendLog, LogRecord
from .timeutil import parse_timestamp, to_iso, utcnow

CONTEXT_FAULT_FOUND = "fault_found"
CONTEXT_REPAIR_DONE = "repair_done"
CONTEXT_RAIL_EVENT = "rail_event"
LABEL_CONTEXTS = (CONTEXT_FAULT_FOUND, CONTEXT_REPAIR_DONE, CONTEXT_RAIL_EVENT)

# which labeling contexts apply to which event kind
CONTEXTS_BY_EVENT = {
    _events.CONTEXT_TRAIN_CAR: (CONTEXT_FAULT_FOUND, CONTEXT_REPAIR_DONE),
    _events.CONTEXT_RAIL: (CONTEXT_RAIL_EVENT,),
}

SEED_NAMES = ("axle defect", "flat spot", "commutator issue")
SEED_CONTEXTS = (CONTEXT_FAULT_FOUND, CONTEXT_REPAIR_DONE)

MAX_NAME_LENGTH = 120

KIND_LABEL = "label"


def fold(name: str) -> str:
    """Normalization used for duplicate detection: trim, then casefold."""
    return name.strip().casefold()


@dataclass(frozen=True)
class Label:
    label_id: str
    name: str
    context: str
    created_by: str
    created_at: datetime

    def as_dict(self) -> dict:
        return {
            "label_id": self.label_id,
            "name": self.name,
            "context": self.context,
            "created_by": self.created_by,
            "created_at": to_iso(self.created_at),
        }


class LabelRegistry:
    def __init__(self, log: AppendLog, now: Callable[[], datetime] = utcnow):
        self._log = log
        self._now = now
        self._labels: dict[str, Label] = {}
        self._by_fold: dict[tuple[str, str], str] = {}

    def create_label(self, name: str, context: str, created_by: str) -> Label:
        """Atomic check-and-insert of a new label name.

        The duplicate check and the insert happen under the store-wide
        mutation lock, so two racing creates of the same name cannot both
        succeed.
        """
        if context not in LABEL_CONTEXTS:
            raise InvalidRequest(f"unknown label context: {context!r}")
        trimmed = name.strip()
        if not trimmed:
            raise EmptyName("label name is empty after trimming")
        if len(trimmed) > MAX_NAME_LENGTH:
            raise NameTooLong(
                f"label name exceeds {MAX_NAME_LENGTH} characters ({len(trimmed)})"
            )
        with self._log.mutation_lock:
            key = (context, fold(trimmed))
            if key in self._by_fold:
                existing = self._labels[self._by_fold[key]]
                raise DuplicateLabel(
                    f"label {existing.name!r} already exists in {context}"
                )
            label_id = "lb" + uuid.uuid4().hex
            record = self._log.append(
                KIND_LABEL,
                label_id,
                None,
                {
                    "name": trimmed,
                    "context": context,
                    "created_by": created_by,
                    "created_at": to_iso(self._now()),
                },
            )
            return self.apply(record)

    def seed_defaults(self) -> int:
        """Create the initial workshop labels; a no-op once they exist.

        Each seed name is mirrored into both train-car contexts. The rail
        context starts empty on purpose: rail incident labels are created by
        annotators as incidents come in.
        """
        created = 0
        with self._log.mutation_lock:
            for context in SEED_CONTEXTS:
                for name in SEED_NAMES:
                    if (context, fold(name)) not in self._by_fold:
                        self.create_label(name, context, "seed")
                        created += 1
        return created

    def list_labels(self, context: str) -> list[Label]:
        """All labels of a context, alphabetical and case-insensitive."""
        if context not in LABEL_CONTEXTS:
            raise InvalidRequest(f"unknown label context: {context!r}")
        selected = [l for l in self._labels.values() if l.context == context]
        return sorted(selected, key=lambda l: (fold(l.name), l.name))

    def get(self, label_id: str) -> Label:
        try:
            return self._labels[label_id]
        except KeyError:
            raise NotFound(f"no such label: {label_id}") from None

    def __len__(self) -> int:
        return len(self._labels)

    def apply(self, record: LogRecord) -> Label:
        p = record.payload
        label = Label(
            label_id=record.event_id,
            name=p["name"],
            context=p["context"],
            created_by=p["created_by"],
            created_at=parse_timestamp(p["created_at"]),
        )
        self._labels[label.label_id] = label
        self._by_fold[(label.context, fold(label.name))] = label.label_id
        return label
