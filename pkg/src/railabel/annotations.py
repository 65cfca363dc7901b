"""The stage → verify → submit annotation workflow, plus training export.

Drafts are volatile: they live in memory keyed by (annotator, event) and do
not survive a restart, mirroring how a UI holds in-progress selections.
Submission is the only persisting step and it is atomic: one log append
carries the whole annotation, and the event's labeled flag is derived from
it, so there is no second write that could land half.

Re-labeling an already labeled event simply appends another annotation; the
full history exports. Nothing here resolves disagreement between annotators.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Iterator

from .errors import ContextMismatch, EmptyDraft, NotFound
from .events import EventStore
from .labels import CONTEXTS_BY_EVENT, LabelRegistry
from .storage import AppendLog, LogRecord
from .timeutil import parse_timestamp, to_iso, utcnow

KIND_ANNOTATION = "annotation"


@dataclass
class AnnotationDraft:
    event_id: str
    selections: dict[str, frozenset[str]]  # context -> label ids
    annotator: str

    def is_empty(self) -> bool:
        return not any(self.selections.values())

    def as_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "annotator": self.annotator,
            "selections": {c: sorted(ids) for c, ids in self.selections.items()},
        }


@dataclass(frozen=True)
class Annotation:
    annotation_id: str
    event_id: str
    selections: dict[str, frozenset[str]]
    annotator: str
    submitted_at: datetime

    def as_dict(self) -> dict:
        return {
            "annotation_id": self.annotation_id,
            "event_id": self.event_id,
            "annotator": self.annotator,
            "submitted_at": to_iso(self.submitted_at),
            "selections": {c: sorted(ids) for c, ids in self.selections.items()},
        }


class AnnotationEngine:
    def __init__(
        self,
        log: AppendLog,
        events: EventStore,
        labels: LabelRegistry,
        now: Callable[[], datetime] = utcnow,
    ):
        self._log = log
        self._events = events
        self._labels = labels
        self._now = now
        self._drafts: dict[tuple[str, str], AnnotationDraft] = {}
        self._annotations: list[Annotation] = []

    # -- drafting ----------------------------------------------------------

    def stage_draft(
        self, event_id: str, selections: dict, annotator: str
    ) -> AnnotationDraft:
        """Validate and store a draft, replacing the annotator's previous
        draft for the same event."""
        event = self._events.get_event(event_id)
        allowed = CONTEXTS_BY_EVENT[event.context]
        normalized: dict[str, frozenset[str]] = {c: frozenset() for c in allowed}
        for context, ids in selections.items():
            if context not in allowed:
                raise ContextMismatch(
                    f"context {context!r} does not apply to a {event.context} event"
                )
            resolved = set()
            for label_id in ids:
                label = self._labels.get(label_id)  # raises NotFound
                if label.context != context:
                    raise ContextMismatch(
                        f"label {label.name!r} belongs to {label.context}, "
                        f"not {context}"
                    )
                resolved.add(label_id)
            normalized[context] = frozenset(resolved)
        draft = AnnotationDraft(event_id=event_id, selections=normalized, annotator=annotator)
        self._drafts[(annotator, event_id)] = draft
        return draft

    def get_draft(self, annotator: str, event_id: str) -> AnnotationDraft:
        try:
            return self._drafts[(annotator, event_id)]
        except KeyError:
            raise NotFound(
                f"no staged draft for event {event_id} by {annotator}"
            ) from None

    def verification_summary(self, draft: AnnotationDraft) -> dict:
        """What the annotator is about to persist, with names resolved.

        This is the payload behind the confirmation overlay: the event's
        identity fields plus the selected label names per context. Submit
        persists exactly these selections.
        """
        if draft.is_empty():
            raise EmptyDraft("no labels selected in any context")
        event = self._events.get_event(draft.event_id)
        summary = event.as_dict()
        summary.pop("status", None)
        return {
            "event": summary,
            "annotator": draft.annotator,
            "labels": {
                context: sorted(self._labels.get(i).name for i in ids)
                for context, ids in draft.selections.items()
            },
        }

    # -- submission --------------------------------------------------------

    def submit(self, draft: AnnotationDraft) -> Annotation:
        """Persist the draft as an immutable annotation.

        One durable log append carries everything; the in-memory apply
        (annotation list, event labeled flag, draft removal) runs only after
        the append succeeded, so a storage failure changes nothing.
        """
        key = (draft.annotator, draft.event_id)
        with self._log.mutation_lock:
            if self._drafts.get(key) is not draft:
                raise NotFound("draft is no longer staged")
            if draft.is_empty():
                raise EmptyDraft("no labels selected in any context")
            self._events.get_event(draft.event_id)  # NotFound if missing
            annotation_id = "an" + uuid.uuid4().hex
            record = self._log.append(
                KIND_ANNOTATION,
                annotation_id,
                None,
                {
                    "event_id": draft.event_id,
                    "annotator": draft.annotator,
                    "submitted_at": to_iso(self._now()),
                    "selections": {
                        c: sorted(ids) for c, ids in draft.selections.items()
                    },
                },
            )
            annotation = self.apply(record)
            del self._drafts[key]
            return annotation

    def apply(self, record: LogRecord) -> Annotation:
        p = record.payload
        annotation = Annotation(
            annotation_id=record.event_id,
            event_id=p["event_id"],
            selections={c: frozenset(ids) for c, ids in p["selections"].items()},
            annotator=p["annotator"],
            submitted_at=parse_timestamp(p["submitted_at"]),
        )
        self._annotations.append(annotation)
        self._events.mark_labeled(annotation.event_id)
        return annotation

    # -- export ------------------------------------------------------------

    def export_training_records(self, since: object = None) -> Iterator[dict]:
        """Training records for every annotation with submitted_at >= since,
        oldest first (newest last). Label names resolve at export time."""
        cutoff = parse_timestamp(since) if since is not None else None
        ordered = sorted(
            enumerate(self._annotations),
            key=lambda pair: (pair[1].submitted_at, pair[0]),
        )
        for _, annotation in ordered:
            if cutoff is not None and annotation.submitted_at < cutoff:
                continue
            event = self._events.get_event(annotation.event_id)
            payload = event.as_dict()
            payload.pop("status", None)
            yield {
                "event": payload,
                "labels": {
                    context: sorted(self._labels.get(i).name for i in ids)
                    for context, ids in annotation.selections.items()
                },
                "annotator": annotation.annotator,
                "submitted_at": to_iso(annotation.submitted_at),
            }

    @property
    def annotations(self) -> list[Annotation]:
        return list(self._annotations)
