"""Study sessions: counterbalanced groups, timed rounds, interaction logs.

A session runs two rounds, one on the workshop dashboard and one on the
rails dashboard; the group decides the order. The first round is open from
session start; closing it opens the second. Each round is capped at 600
seconds plus a small grace for the closing write.

Task completion is signalled mechanically: the task runner posts a success
interaction whose action is ``task_complete <task_id>`` when a task's
expected outcome is met. Round close derives per-task results from those
markers, so metric recomputation is a pure function of the stored log.
"""

from __future__ import annotations

import random
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Sequence

from .errors import (
    DuplicateParticipant,
    InvalidRequest,
    NotFound,
    RoundClosed,
    RoundsOpen,
)
from .scenario import ROUND_KINDS, TaskScript
from .storage import AppendLog, LogRecord
from .timeutil import parse_timestamp, to_iso, utcnow

GROUP_WORKSHOP_FIRST = "workshop_first"
GROUP_RAILS_FIRST = "rails_first"

ROUND_CAP_SECONDS = 600.0

KIND_SESSION = "study_session"
KIND_INTERACTION = "interaction"
KIND_ROUND_CLOSE = "round_close"
KIND_QUESTIONNAIRE = "questionnaire"

TASK_COMPLETE_PREFIX = "task_complete "


@dataclass
class InteractionRecord:
    timestamp: datetime
    kind: str  # "success" | "error"
    action: str

    def as_dict(self) -> dict:
        return {
            "timestamp": to_iso(self.timestamp),
            "kind": self.kind,
            "action": self.action,
        }


@dataclass
class TaskResult:
    task_id: str
    completed: bool
    duration_seconds: float

    def as_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "completed": self.completed,
            "duration_seconds": self.duration_seconds,
        }


@dataclass
class Round:
    kind: str
    state: str = "pending"  # pending | open | closed
    started_at: datetime | None = None
    ended_at: datetime | None = None
    end_reason: str | None = None  # completed | timeout
    log: list[InteractionRecord] = field(default_factory=list)
    task_results: list[TaskResult] = field(default_factory=list)

    @property
    def duration_seconds(self) -> float | None:
        if self.started_at is None or self.ended_at is None:
            return None
        return (self.ended_at - self.started_at).total_seconds()

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "state": self.state,
            "started_at": to_iso(self.started_at) if self.started_at else None,
            "ended_at": to_iso(self.ended_at) if self.ended_at else None,
            "end_reason": self.end_reason,
            "duration_seconds": self.duration_seconds,
            "task_results": [t.as_dict() for t in self.task_results],
            "log": [r.as_dict() for r in self.log],
        }


@dataclass
class StudySession:
    session_id: str
    participant: dict
    group: str
    round_order: tuple[str, str]
    rounds: dict[str, Round]
    created_at: datetime
    # (instrument, round kind or None) -> responses
    questionnaires: dict[tuple[str, str | None], list[int]] = field(
        default_factory=dict
    )
    notes: str = ""

    def current_round(self) -> Round | None:
        for kind in self.round_order:
            r = self.rounds[kind]
            if r.state != "closed":
                return r
        return None

    def all_closed(self) -> bool:
        return all(r.state == "closed" for r in self.rounds.values())

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "participant": dict(self.participant),
            "group": self.group,
            "round_order": list(self.round_order),
            "created_at": to_iso(self.created_at),
            "rounds": [self.rounds[k].as_dict() for k in self.round_order],
            "questionnaires": [
                {"instrument": inst, "round": rnd, "responses": list(resp)}
                for (inst, rnd), resp in self.questionnaires.items()
            ],
            "notes": self.notes,
        }


class StudyManager:
    """Owns all study sessions and their persistence."""

    def __init__(
        self,
        log: AppendLog,
        tasks: Sequence[TaskScript] = (),
        round_cap_seconds: float = ROUND_CAP_SECONDS,
        close_grace_seconds: float = 2.0,
        assignment: str = "alternate",
        seed: int | None = None,
        now: Callable[[], datetime] = utcnow,
    ):
        if assignment not in ("alternate", "random"):
            raise InvalidRequest(f"unknown assignment mode: {assignment!r}")
        self._log = log
        self._tasks = list(tasks)
        self._cap = round_cap_seconds
        self._grace = close_grace_seconds
        self._assignment = assignment
        self._rng = random.Random(seed)
        self._now = now
        self._sessions: dict[str, StudySession] = {}
        self._participants: set[str] = set()

    # -- session lifecycle ---------------------------------------------------

    def start_session(self, participant: dict) -> StudySession:
        participant_id = participant.get("participant_id")
        if not participant_id:
            raise InvalidRequest("participant_id is required")
        with self._log.mutation_lock:
            if participant_id in self._participants:
                raise DuplicateParticipant(
                    f"participant {participant_id!r} already has a session"
                )
            group = self._assign_group()
            session_id = "ss" + uuid.uuid4().hex
            record = self._log.append(
                KIND_SESSION,
                session_id,
                None,
                {
                    "participant": dict(participant),
                    "group": group,
                    "created_at": to_iso(self._now()),
                },
            )
            return self._apply_session(record)

    def _assign_group(self) -> str:
        counts = {GROUP_WORKSHOP_FIRST: 0, GROUP_RAILS_FIRST: 0}
        for s in self._sessions.values():
            counts[s.group] += 1
        if counts[GROUP_WORKSHOP_FIRST] < counts[GROUP_RAILS_FIRST]:
            return GROUP_WORKSHOP_FIRST
        if counts[GROUP_RAILS_FIRST] < counts[GROUP_WORKSHOP_FIRST]:
            return GROUP_RAILS_FIRST
        if self._assignment == "random":
            return self._rng.choice((GROUP_WORKSHOP_FIRST, GROUP_RAILS_FIRST))
        return GROUP_WORKSHOP_FIRST

    def get_session(self, session_id: str) -> StudySession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise NotFound(f"no such session: {session_id}") from None

    def sessions(self) -> list[StudySession]:
        return list(self._sessions.values())

    def group_counts(self) -> dict[str, int]:
        counts = {GROUP_WORKSHOP_FIRST: 0, GROUP_RAILS_FIRST: 0}
        for s in self._sessions.values():
            counts[s.group] += 1
        return counts

    # -- round activity --------------------------------------------------------

    def record_interaction(
        self, session_id: str, round_kind: str, timestamp: object, kind: str, action: str
    ) -> InteractionRecord:
        """Append one interaction to an open round.

        Timestamps must be non-decreasing within a round; a stray earlier
        timestamp from a skewed client clock is clamped up to the previous
        record rather than rejected.
        """
        if kind not in ("success", "error"):
            raise InvalidRequest(f"interaction kind must be success or error: {kind!r}")
        if round_kind not in ROUND_KINDS:
            raise InvalidRequest(f"unknown round: {round_kind!r}")
        when = parse_timestamp(timestamp)
        with self._log.mutation_lock:
            session = self.get_session(session_id)
            round_ = session.rounds[round_kind]
            self._require_open(session, round_)
            if round_.log and when < round_.log[-1].timestamp:
                when = round_.log[-1].timestamp
            record = self._log.append(
                KIND_INTERACTION,
                session_id,
                None,
                {
                    "round": round_kind,
                    "timestamp": to_iso(when),
                    "kind": kind,
                    "action": action,
                },
            )
            return self._apply_interaction(record)

    def close_round(self, session_id: str, round_kind: str, at: object) -> Round:
        """Close a round, computing task results and the effective end time.

        The recorded duration never exceeds the cap plus the closing grace:
        a late close (browser left open, runner crashed) is clamped.
        """
        if round_kind not in ROUND_KINDS:
            raise InvalidRequest(f"unknown round: {round_kind!r}")
        when = parse_timestamp(at)
        with self._log.mutation_lock:
            session = self.get_session(session_id)
            round_ = session.rounds[round_kind]
            self._require_open(session, round_)
            started = round_.started_at or when
            limit = started + timedelta(seconds=self._cap + self._grace)
            ended = max(started, min(when, limit))
            results = self._task_results(round_, started, ended)
            # vacuously "completed" when a round has no tasks configured:
            # timeout must imply an incomplete task
            reason = (
                "completed" if all(t.completed for t in results) else "timeout"
            )
            record = self._log.append(
                KIND_ROUND_CLOSE,
                session_id,
                None,
                {
                    "round": round_kind,
                    "started_at": to_iso(started),
                    "ended_at": to_iso(ended),
                    "end_reason": reason,
                    "task_results": [t.as_dict() for t in results],
                },
            )
            return self._apply_round_close(record)

    def _require_open(self, session: StudySession, round_: Round) -> None:
        if round_.state == "closed":
            raise RoundClosed(f"round {round_.kind} is already closed")
        if round_.state == "pending":
            current = session.current_round()
            raise RoundClosed(
                f"round {round_.kind} has not started yet "
                f"(current round is {current.kind if current else 'none'})"
            )

    def _task_results(
        self, round_: Round, started: datetime, ended: datetime
    ) -> list[TaskResult]:
        """Derive per-task outcomes from completion markers in the log.

        Completed tasks get the time between the previous completion (or
        round start) and their marker. An incomplete task consumes whatever
        was left to the cap, reported separately and excluded from task-time
        sums by the metrics step.
        """
        completions: dict[str, datetime] = {}
        for rec in round_.log:
            if rec.kind == "success" and rec.action.startswith(TASK_COMPLETE_PREFIX):
                task_id = rec.action[len(TASK_COMPLETE_PREFIX):].strip()
                completions.setdefault(task_id, rec.timestamp)
        results = []
        previous = started
        for task in (t for t in self._tasks if t.round == round_.kind):
            done_at = completions.get(task.task_id)
            if done_at is not None:
                duration = (min(done_at, ended) - previous).total_seconds()
                results.append(TaskResult(task.task_id, True, max(0.0, duration)))
                previous = min(done_at, ended)
            else:
                elapsed = (previous - started).total_seconds()
                results.append(
                    TaskResult(task.task_id, False, max(0.0, self._cap - elapsed))
                )
        return results

    # -- questionnaires --------------------------------------------------------

    def record_questionnaire(
        self,
        session_id: str,
        instrument: str,
        round_kind: str | None,
        responses: Sequence[int],
    ) -> None:
        """Store raw responses; a resubmission replaces the previous one."""
        if round_kind is not None and round_kind not in ROUND_KINDS:
            raise InvalidRequest(f"unknown round: {round_kind!r}")
        with self._log.mutation_lock:
            self.get_session(session_id)
            record = self._log.append(
                KIND_QUESTIONNAIRE,
                session_id,
                None,
                {
                    "instrument": instrument,
                    "round": round_kind,
                    "responses": list(responses),
                },
            )
            self._apply_questionnaire(record)

    # -- metrics ----------------------------------------------------------------

    def compute_metrics(self, session_id: str) -> dict:
        """Timing and interaction metrics, per round and overall.

        The success ratio is successes / (successes + errors); with an empty
        log there is nothing to divide and the ratio is reported as null
        rather than zero.
        """
        session = self.get_session(session_id)
        if not session.all_closed():
            raise RoundsOpen("metrics need both rounds closed")
        rounds = {}
        total = {"task_time": 0.0, "completed": 0, "tasks": 0, "s": 0, "e": 0}
        for kind in session.round_order:
            r = session.rounds[kind]
            successes = sum(1 for rec in r.log if rec.kind == "success")
            errors = sum(1 for rec in r.log if rec.kind == "error")
            task_time = sum(
                t.duration_seconds for t in r.task_results if t.completed
            )
            completed = sum(1 for t in r.task_results if t.completed)
            rounds[kind] = {
                "end_reason": r.end_reason,
                "duration_seconds": r.duration_seconds,
                "task_time_seconds": task_time,
                "tasks_completed": completed,
                "tasks_total": len(r.task_results),
                "successes": successes,
                "errors": errors,
                "success_ratio": (
                    successes / (successes + errors) if r.log else None
                ),
                "tasks": [t.as_dict() for t in r.task_results],
            }
            total["task_time"] += task_time
            total["completed"] += completed
            total["tasks"] += len(r.task_results)
            total["s"] += successes
            total["e"] += errors
        interactions = total["s"] + total["e"]
        return {
            "session_id": session.session_id,
            "group": session.group,
            "rounds": rounds,
            "overall": {
                "task_time_seconds": total["task_time"],
                "tasks_completed": total["completed"],
                "tasks_total": total["tasks"],
                "successes": total["s"],
                "errors": total["e"],
                "success_ratio": (
                    total["s"] / interactions if interactions else None
                ),
            },
        }

    # -- log appliers -------------------------------------------------------------

    def apply(self, record: LogRecord) -> None:
        if record.kind == KIND_SESSION:
            self._apply_session(record)
        elif record.kind == KIND_INTERACTION:
            self._apply_interaction(record)
        elif record.kind == KIND_ROUND_CLOSE:
            self._apply_round_close(record)
        elif record.kind == KIND_QUESTIONNAIRE:
            self._apply_questionnaire(record)
        else:
            raise ValueError(f"not a study record: {record.kind}")

    def _apply_session(self, record: LogRecord) -> StudySession:
        p = record.payload
        group = p["group"]
        order = (
            ("workshop", "rails")
            if group == GROUP_WORKSHOP_FIRST
            else ("rails", "workshop")
        )
        rounds = {kind: Round(kind=kind) for kind in order}
        rounds[order[0]].state = "open"
        session = StudySession(
            session_id=record.event_id,
            participant=p["participant"],
            group=group,
            round_order=order,
            rounds=rounds,
            created_at=parse_timestamp(p["created_at"]),
        )
        self._sessions[session.session_id] = session
        self._participants.add(p["participant"]["participant_id"])
        return session

    def _apply_interaction(self, record: LogRecord) -> InteractionRecord:
        p = record.payload
        session = self._sessions[record.event_id]
        round_ = session.rounds[p["round"]]
        rec = InteractionRecord(
            timestamp=parse_timestamp(p["timestamp"]),
            kind=p["kind"],
            action=p["action"],
        )
        round_.log.append(rec)
        if round_.started_at is None:
            round_.started_at = rec.timestamp
        return rec

    def _apply_round_close(self, record: LogRecord) -> Round:
        p = record.payload
        session = self._sessions[record.event_id]
        round_ = session.rounds[p["round"]]
        round_.state = "closed"
        round_.started_at = parse_timestamp(p["started_at"])
        round_.ended_at = parse_timestamp(p["ended_at"])
        round_.end_reason = p["end_reason"]
        round_.task_results = [
            TaskResult(t["task_id"], t["completed"], t["duration_seconds"])
            for t in p["task_results"]
        ]
        for kind in session.round_order:
            if session.rounds[kind].state == "pending":
                session.rounds[kind].state = "open"
                break
        return round_

    def _apply_questionnaire(self, record: LogRecord) -> None:
        p = record.payload
        session = self._sessions[record.event_id]
        session.questionnaires[(p["instrument"], p["round"])] = list(p["responses"])
