"""Synthetic annotator: replays a scenario against a running service.

The client only talks HTTP, exactly like the browser UI would: it logs in
with the scenario's accounts, ingests the fixtures as the experimenter,
works through each task as the round's annotator (create labels, stage a
draft, read the verification summary, submit), and records a study session
with one interaction per API call along the way.

Expectation failures never abort the run; they are collected in the report
so a single broken task still leaves a complete picture.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from typing import Any

import httpx

from .errors import ServiceUnreachable
from .labels import fold
from .scenario import Scenario, TaskScript, load_scenario
from .study import TASK_COMPLETE_PREFIX
from .timeutil import to_iso, utcnow


@dataclass
class Check:
    description: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {"description": self.description, "passed": self.passed, "detail": self.detail}


@dataclass
class TaskOutcome:
    task_id: str
    round: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, description: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(description, passed, detail))

    def as_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "round": self.round,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }


@dataclass
class ReplayReport:
    scenario: str
    target: str
    tasks: list[TaskOutcome] = field(default_factory=list)
    ingested: dict = field(default_factory=dict)
    export_check: dict = field(default_factory=dict)
    session: dict | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            all(t.passed for t in self.tasks)
            and bool(self.export_check.get("passed"))
        )

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "target": self.target,
            "passed": self.passed,
            "tasks": [t.as_dict() for t in self.tasks],
            "ingested": self.ingested,
            "export_check": self.export_check,
            "session": self.session,
            "notes": self.notes,
        }


class ReplayClient:
    def __init__(self, target: str, scenario: Scenario | str, timeout: float = 10.0):
        if isinstance(scenario, str):
            scenario = load_scenario(scenario)
        self.scenario = scenario
        self.target = target.rstrip("/")
        self._http = httpx.Client(base_url=self.target, timeout=timeout)
        self._tokens: dict[str, str] = {}
        self._event_ids: dict[str, str] = {}
        self._session_id: str | None = None
        self._report = ReplayReport(scenario=scenario.name, target=self.target)

    # -- low-level ----------------------------------------------------------

    def _request(self, role: str, method: str, url: str, **kwargs) -> httpx.Response:
        headers = kwargs.pop("headers", {})
        token = self._tokens.get(role)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            return self._http.request(method, url, headers=headers, **kwargs)
        except httpx.TransportError as exc:
            raise ServiceUnreachable(f"{self.target}: {exc}") from exc

    def _interact(self, role: str, round_kind: str, kind: str, action: str) -> None:
        """Forward one UI action outcome into the session's interaction log."""
        if self._session_id is None:
            return
        response = self._request(
            role,
            "POST",
            f"/study/sessions/{self._session_id}/interactions",
            json={
                "round": round_kind,
                "timestamp": to_iso(utcnow()),
                "kind": kind,
                "action": action,
            },
        )
        if response.status_code >= 400:
            self._report.notes.append(
                f"interaction log rejected ({response.status_code}): {action}"
            )

    def _login(self, role: str) -> None:
        account = self.scenario.accounts.get(role)
        if account is None:
            raise ServiceUnreachable(f"scenario has no {role!r} account")
        response = self._request(
            None, "POST", "/login",
            json={"username": account["username"], "password": account["password"]},
        )
        if response.status_code != 200:
            raise ServiceUnreachable(
                f"login as {role} failed ({response.status_code}): {response.text}"
            )
        self._tokens[role] = response.json()["token"]

    # -- run ------------------------------------------------------------------

    def run(self) -> ReplayReport:
        for role in ("experimenter", "workshop", "rails"):
            self._login(role)
        self._start_session()
        self._ingest_fixtures()
        order = self._round_order()
        for round_kind in order:
            role = "workshop" if round_kind == "workshop" else "rails"
            for task in self.scenario.tasks_for_round(round_kind):
                self._report.tasks.append(self._run_task(task, role))
            self._close_round(role, round_kind)
        self._fetch_session_metrics()
        self._check_export()
        return self._report

    def _start_session(self) -> None:
        participant = self.scenario.participant
        if participant is None:
            return
        response = self._request(
            "experimenter", "POST", "/study/sessions", json={"participant": participant}
        )
        if response.status_code == 201:
            body = response.json()
            self._session_id = body["session_id"]
            self._report.session = {
                "session_id": body["session_id"],
                "group": body["group"],
                "round_order": body["round_order"],
            }
        else:
            self._report.notes.append(
                f"study session not recorded ({response.status_code}): {response.text}"
            )

    def _round_order(self) -> list[str]:
        if self._report.session:
            return list(self._report.session["round_order"])
        return ["workshop", "rails"]

    def _ingest_fixtures(self) -> None:
        created = existing = 0
        for entry in self.scenario.train_car_events:
            response = self._request(
                "experimenter", "POST", "/ingest/workshop-visit",
                json={
                    "train_car_id": entry["train_car_id"],
                    "entered_at": entry["entered_at"],
                    "exited_at": entry["exited_at"],
                    "external_key": entry["key"],
                },
            )
            self._record_ingest(entry["key"], response)
            created, existing = self._count(response, created, existing)
        for entry in self.scenario.ride_events:
            response = self._request(
                "experimenter", "POST", "/ingest/button-press",
                json={
                    "train_id": entry["train_id"],
                    "occurred_at": entry["occurred_at"],
                    "location": entry["location"],
                    "external_key": entry["key"],
                },
            )
            self._record_ingest(entry["key"], response)
            created, existing = self._count(response, created, existing)
        self._report.ingested = {"created": created, "existing": existing}

    def _record_ingest(self, key: str, response: httpx.Response) -> None:
        if response.status_code in (200, 201):
            self._event_ids[key] = response.json()["event_id"]
        else:
            self._report.notes.append(
                f"ingest of {key} failed ({response.status_code}): {response.text}"
            )

    @staticmethod
    def _count(response: httpx.Response, created: int, existing: int) -> tuple[int, int]:
        if response.status_code == 201:
            created += 1
        elif response.status_code == 200:
            existing += 1
        return created, existing

    # -- tasks ------------------------------------------------------------------

    def _run_task(self, task: TaskScript, role: str) -> TaskOutcome:
        outcome = TaskOutcome(task_id=task.task_id, round=task.round)
        for creation in task.creates_labels:
            response = self._request(
                role, "POST", "/labels",
                json={"name": creation.name, "context": creation.context},
            )
            if response.status_code == 201:
                self._interact(role, task.round, "success",
                               f"create_label {creation.context} {creation.name}")
                outcome.check(f"create label {creation.name!r}", True)
            elif response.status_code == 409:
                # already there; an annotator would see the inline duplicate
                # warning, which counts as one error interaction
                self._interact(role, task.round, "error",
                               f"create_label {creation.context} {creation.name}")
                outcome.check(f"create label {creation.name!r}", True, "existed")
            else:
                self._interact(role, task.round, "error",
                               f"create_label {creation.context} {creation.name}")
                outcome.check(
                    f"create label {creation.name!r}", False,
                    f"{response.status_code}: {response.text}",
                )
        for event_key, by_context in task.expected.items():
            self._annotate_event(outcome, task, role, event_key, by_context)
        if outcome.passed:
            self._interact(role, task.round, "success",
                           TASK_COMPLETE_PREFIX + task.task_id)
        return outcome

    def _annotate_event(
        self,
        outcome: TaskOutcome,
        task: TaskScript,
        role: str,
        event_key: str,
        by_context: dict[str, tuple[str, ...]],
    ) -> None:
        event_id = self._event_ids.get(event_key)
        if event_id is None:
            outcome.check(f"{event_key}: fixture ingested", False, "no event id")
            return
        selections: dict[str, list[str]] = {}
        for context, names in by_context.items():
            response = self._request(role, "GET", "/labels", params={"context": context})
            if response.status_code != 200:
                self._interact(role, task.round, "error", f"list_labels {context}")
                outcome.check(f"{event_key}: list {context} labels", False, response.text)
                return
            self._interact(role, task.round, "success", f"list_labels {context}")
            by_name = {fold(l["name"]): l["label_id"] for l in response.json()["labels"]}
            ids = []
            for name in names:
                label_id = by_name.get(fold(name))
                if label_id is None:
                    outcome.check(
                        f"{event_key}: label {name!r} available in {context}", False
                    )
                    return
                ids.append(label_id)
            selections[context] = ids

        response = self._request(
            role, "POST", "/drafts",
            json={"event_id": event_id, "selections": selections},
        )
        kind = "success" if response.status_code == 200 else "error"
        self._interact(role, task.round, kind, f"stage_draft {event_key}")
        outcome.check(f"{event_key}: stage draft", response.status_code == 200,
                      "" if response.status_code == 200 else response.text)
        if response.status_code != 200:
            return

        response = self._request(role, "GET", f"/drafts/{event_id}/summary")
        ok = response.status_code == 200
        self._interact(role, task.round, "success" if ok else "error",
                       f"verification_summary {event_key}")
        if not ok:
            outcome.check(f"{event_key}: verification summary", False, response.text)
            return
        shown = {
            context: sorted(names)
            for context, names in response.json()["labels"].items()
            if names
        }
        wanted = {context: sorted(names) for context, names in by_context.items() if names}
        outcome.check(
            f"{event_key}: summary lists exactly the selected labels",
            shown == wanted,
            "" if shown == wanted else f"summary {shown} != expected {wanted}",
        )

        response = self._request(role, "POST", f"/drafts/{event_id}/submit")
        ok = response.status_code == 201
        self._interact(role, task.round, "success" if ok else "error",
                       f"submit {event_key}")
        outcome.check(f"{event_key}: submit", ok, "" if ok else response.text)
        if not ok:
            return

        response = self._request(role, "GET", f"/events/{event_id}")
        labeled = response.status_code == 200 and response.json()["status"] == "labeled"
        outcome.check(f"{event_key}: event now labeled", labeled)

    def _close_round(self, role: str, round_kind: str) -> None:
        if self._session_id is None:
            return
        response = self._request(
            role, "POST",
            f"/study/sessions/{self._session_id}/rounds/{round_kind}/close",
            json={"at": to_iso(utcnow())},
        )
        if response.status_code != 200:
            self._report.notes.append(
                f"round {round_kind} close failed ({response.status_code}): "
                f"{response.text}"
            )

    def _fetch_session_metrics(self) -> None:
        if self._session_id is None:
            return
        response = self._request(
            "experimenter", "GET", f"/study/sessions/{self._session_id}/metrics"
        )
        if response.status_code == 200 and self._report.session is not None:
            self._report.session["metrics"] = response.json()

    # -- export verification -------------------------------------------------------

    def _check_export(self) -> None:
        response = self._request("experimenter", "GET", "/export", params={"since": "0"})
        if response.status_code != 200:
            self._report.export_check = {
                "passed": False,
                "detail": f"{response.status_code}: {response.text}",
            }
            return
        records = [json.loads(line) for line in response.text.splitlines() if line]
        expected_total = sum(len(t.expected) for t in self.scenario.tasks)
        problems = []
        for task in self.scenario.tasks:
            for event_key, by_context in task.expected.items():
                event_id = self._event_ids.get(event_key)
                matches = [r for r in records if r["event"]["event_id"] == event_id]
                if not matches:
                    problems.append(f"no training record for {event_key}")
                    continue
                record = matches[-1]
                got = {c: sorted(n) for c, n in record["labels"].items() if n}
                want = {c: sorted(n) for c, n in by_context.items() if n}
                if got != want:
                    problems.append(f"{event_key}: labels {got} != expected {want}")
        self._report.export_check = {
            "passed": len(records) == expected_total and not problems,
            "records": len(records),
            "expected_records": expected_total,
            "problems": problems,
        }

    def close(self) -> None:
        self._http.close()


def replay_scenario(scenario: Scenario | str, target: str) -> ReplayReport:
    client = ReplayClient(target, scenario)
    try:
        return client.run()
    finally:
        client.close()
