"""Scenario files: ingestion fixtures plus scripted study tasks.

A scenario is a JSON document describing everything a study run needs: the
events to ingest up front, the annotator accounts to act as, the scripted
tasks per round with their expected outcomes, and optionally a synthetic
participant so the run records a full study session.

The expected outcome of a task is mechanical: after the task, each listed
event must carry exactly the given label names in the given contexts. A
task may also instruct label creations; expectations may only reference
label names that are seeded by default or created by the scenario itself,
which is checked at load time so a broken fixture fails fast.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ScenarioParseError
from .labels import (
    CONTEXTS_BY_EVENT,
    LABEL_CONTEXTS,
    SEED_CONTEXTS,
    SEED_NAMES,
    fold,
)

ROUND_WORKSHOP = "workshop"
ROUND_RAILS = "rails"
ROUND_KINDS = (ROUND_WORKSHOP, ROUND_RAILS)


@dataclass(frozen=True)
class LabelCreation:
    context: str
    name: str


@dataclass(frozen=True)
class TaskScript:
    task_id: str
    round: str
    instruction: str
    creates_labels: tuple[LabelCreation, ...]
    # event fixture key -> context -> required label names
    expected: dict[str, dict[str, tuple[str, ...]]]


@dataclass(frozen=True)
class Scenario:
    name: str
    accounts: dict[str, dict[str, str]]
    train_car_events: tuple[dict, ...]
    ride_events: tuple[dict, ...]
    tasks: tuple[TaskScript, ...]
    participant: dict | None

    def tasks_for_round(self, kind: str) -> list[TaskScript]:
        return [t for t in self.tasks if t.round == kind]


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioParseError(f"missing {key!r} in {where}")
    return mapping[key]


def load_scenario(source: Path | str) -> Scenario:
    """Load and validate a scenario.

    ``source`` is a file path, or the name of a packaged scenario such as
    ``default``.
    """
    text = None
    candidate = Path(source)
    if candidate.suffix == ".json" or candidate.exists():
        try:
            text = candidate.read_text("utf-8")
        except OSError as exc:
            raise ScenarioParseError(f"cannot read scenario {source}: {exc}") from exc
    else:
        entry = resources.files("railabel").joinpath(f"scenarios/{source}.json")
        try:
            text = entry.read_text("utf-8")
        except (FileNotFoundError, OSError):
            raise ScenarioParseError(f"no such scenario: {source!r}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioParseError("scenario root must be an object")

    fixtures = _require(raw, "fixtures", "scenario")
    train_car = tuple(fixtures.get("train_car_events", []))
    rides = tuple(fixtures.get("ride_events", []))
    keys: dict[str, str] = {}
    for entry in train_car:
        keys[_require(entry, "key", "train_car_events")] = "train_car"
    for entry in rides:
        key = _require(entry, "key", "ride_events")
        if key in keys:
            raise ScenarioParseError(f"duplicate fixture key {key!r}")
        keys[key] = "rail"

    known_labels = {
        (context, fold(name)) for context in SEED_CONTEXTS for name in SEED_NAMES
    }
    tasks = []
    for i, entry in enumerate(raw.get("tasks", [])):
        where = f"tasks[{i}]"
        round_kind = _require(entry, "round", where)
        if round_kind not in ROUND_KINDS:
            raise ScenarioParseError(f"{where}: unknown round {round_kind!r}")
        creations = []
        for c in entry.get("creates_labels", []):
            context = _require(c, "context", where)
            if context not in LABEL_CONTEXTS:
                raise ScenarioParseError(f"{where}: unknown context {context!r}")
            name = _require(c, "name", where)
            creations.append(LabelCreation(context=context, name=name))
            known_labels.add((context, fold(name)))
        expected: dict[str, dict[str, tuple[str, ...]]] = {}
        for key, by_context in entry.get("expected", {}).items():
            if key not in keys:
                raise ScenarioParseError(
                    f"{where}: expected outcome references unknown fixture {key!r}"
                )
            valid_contexts = CONTEXTS_BY_EVENT[keys[key]]
            expected[key] = {}
            for context, names in by_context.items():
                if context not in valid_contexts:
                    raise ScenarioParseError(
                        f"{where}: context {context!r} does not apply to "
                        f"fixture {key!r}"
                    )
                for name in names:
                    if (context, fold(name)) not in known_labels:
                        raise ScenarioParseError(
                            f"{where}: expected label {name!r} is neither seeded "
                            f"nor created by the scenario"
                        )
                expected[key][context] = tuple(names)
        tasks.append(
            TaskScript(
                task_id=_require(entry, "task_id", where),
                round=round_kind,
                instruction=_require(entry, "instruction", where),
                creates_labels=tuple(creations),
                expected=expected,
            )
        )
    if len({t.task_id for t in tasks}) != len(tasks):
        raise ScenarioParseError("duplicate task_id")

    study = raw.get("study", {})
    return Scenario(
        name=raw.get("name", "unnamed"),
        accounts=raw.get("accounts", {}),
        train_car_events=train_car,
        ride_events=rides,
        tasks=tuple(tasks),
        participant=study.get("participant") if study.get("record_session") else None,
    )
