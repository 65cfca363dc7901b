"""One test per advertised guarantee; the run summary prints one line each.

These are deliberately end-to-end and oracle-driven: scoring checks compare
against hand-worked fixtures and a brute-force rank oracle, the workflow
checks run thousands of randomized operation sequences with fault injection,
and the scenario check drives the real CLI against a real HTTP server.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import shutil
import statistics
import subprocess
import time
import uuid
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from click.testing import CliRunner

from railabel.annotations import AnnotationEngine
from railabel.cli import main as cli_main
from railabel.errors import (
    ConstantInput,
    DuplicateLabel,
    StorageFailure,
    TooShort,
)
from railabel.events import EventStore, GeoPoint
from railabel.labels import CONTEXTS_BY_EVENT, LabelRegistry, fold
from railabel.scoring import (
    QuestionnaireDefinition,
    default_definitions,
    score_ati,
    score_sus,
    score_ueq,
    spearman,
)
from railabel.storage import AppendLog, read_log
from railabel.study import StudyManager

DEFS = default_definitions()
T0 = datetime(2025, 5, 20, 12, 0, 0, tzinfo=timezone.utc)


# ---------------------------------------------------------------------------
# 1. scenario fidelity: replay the scripted protocol, check the export
# ---------------------------------------------------------------------------


def test_c1_scenario_replay_and_export(live_server):
    started = time.monotonic()
    runner = CliRunner()

    result = runner.invoke(
        cli_main,
        ["replay", "--scenario", "default", "--target", live_server.url],
    )
    assert result.exit_code == 0, result.output
    assert result.output.count(": PASS") == 5  # four tasks + export check

    result = runner.invoke(
        cli_main,
        ["export", "--data-dir", str(live_server.data_dir), "--since", "0"],
    )
    assert result.exit_code == 0, result.output
    records = [json.loads(line) for line in result.output.splitlines() if line]
    assert len(records) == 5

    def labels_of(record):
        return {c: sorted(names) for c, names in record["labels"].items() if names}

    by_car = {
        r["event"]["train_car_id"]: labels_of(r)
        for r in records
        if r["event"]["context"] == "train_car"
    }
    assert by_car["918061439587DDB"] == {
        "fault_found": ["axle defect"],
        "repair_done": ["axle defect"],
    }
    assert by_car["918544650040CHBLS"] == {
        "fault_found": ["commutator issue", "flat spot"]
    }

    berlin = timezone(timedelta(hours=2))  # CEST on the scripted study day
    rides = [r for r in records if r["event"]["context"] == "rail"]
    by_hour = {
        datetime.fromisoformat(r["event"]["occurred_at"]).astimezone(berlin).hour:
            labels_of(r)
        for r in rides
    }
    assert by_hour == {
        13: {"rail_event": ["chatter marks"]},
        16: {"rail_event": ["deer on the rails"]},
        20: {"rail_event": ["rail breakage"]},
    }

    assert time.monotonic() - started < 10.0


# ---------------------------------------------------------------------------
# 2. SUS scoring
# ---------------------------------------------------------------------------


def test_c2_sus_scoring():
    assert score_sus([5, 1, 5, 1, 5, 1, 5, 1, 5, 1]) == 100.0
    assert score_sus([3] * 10) == 50.0
    assert score_sus([4, 2, 4, 2, 3, 3, 5, 1, 4, 2]) == 75.0

    rng = random.Random(20250520)
    for _ in range(1000):
        responses = [rng.randint(1, 5) for _ in range(10)]
        score = score_sus(responses)
        assert 0.0 <= score <= 100.0
        assert score == 2.5 * round(score / 2.5)
        # nudging any single answer toward its favorable pole never lowers it
        i = rng.randrange(10)
        nudged = list(responses)
        nudged[i] = min(5, nudged[i] + 1) if i % 2 == 0 else max(1, nudged[i] - 1)
        assert score_sus(nudged) >= score


# ---------------------------------------------------------------------------
# 3. UEQ / ATI scoring
# ---------------------------------------------------------------------------


def _with_reversals(definition, reversed_items):
    return QuestionnaireDefinition(
        instrument=definition.instrument,
        items=definition.items,
        response_range=definition.response_range,
        reversed_items=frozenset(reversed_items),
        scales=definition.scales,
        scoring_rule=definition.scoring_rule,
    )


def test_c3_ueq_ati_scoring():
    ueq, ati = DEFS["ueq"], DEFS["ati"]

    assert score_ueq([4] * 26, ueq) == {s: 0.0 for s in ueq.scales}
    poles = [1 if i in ueq.reversed_items else 7 for i in range(26)]
    assert score_ueq(poles, ueq) == {s: 3.0 for s in ueq.scales}
    anti = [7 if i in ueq.reversed_items else 1 for i in range(26)]
    assert score_ueq(anti, ueq) == {s: -3.0 for s in ueq.scales}

    best = [1 if i in ati.reversed_items else 6 for i in range(9)]
    worst = [6 if i in ati.reversed_items else 1 for i in range(9)]
    assert score_ati(best, ati) == 6.0
    assert score_ati(worst, ati) == 1.0

    # reversal consistency: flipping any item set in both the definition and
    # the responses leaves every score unchanged
    rng = random.Random(42)
    for _ in range(1000):
        if rng.random() < 0.5:
            base, items, lo, hi = ueq, 26, 1, 7
        else:
            base, items, lo, hi = ati, 9, 1, 6
        flips = {i for i in range(items) if rng.random() < 0.5}
        definition = _with_reversals(base, base.reversed_items ^ flips)
        responses = [rng.randint(lo, hi) for _ in range(items)]
        flipped = [
            (lo + hi - r) if i in flips else r for i, r in enumerate(responses)
        ]
        if base is ueq:
            original = score_ueq(responses, base)
            varied = score_ueq(flipped, definition)
            for scale in original:
                assert varied[scale] == pytest.approx(original[scale], abs=1e-12)
        else:
            assert score_ati(flipped, definition) == pytest.approx(
                score_ati(responses, base), abs=1e-12
            )


# ---------------------------------------------------------------------------
# 4. spearman against a brute-force oracle, exhaustively on a small domain
# ---------------------------------------------------------------------------


def _oracle_rho(x, y):
    def ranks(values):
        return [
            sum(1 for o in values if o < v)
            + (sum(1 for o in values if o == v) + 1) / 2
            for v in values
        ]

    return statistics.correlation(ranks(x), ranks(y))


def test_c4_spearman_exhaustive_small_domain():
    assert spearman([1, 2, 3, 4], [10, 11, 19, 240]) == pytest.approx(1.0, abs=1e-12)
    assert spearman([1, 2, 3, 4], [240, 19, 11, 10]) == pytest.approx(-1.0, abs=1e-12)

    with pytest.raises(TooShort):
        spearman([1], [2])
    with pytest.raises(TooShort):
        spearman([1, 2], [2, 1])

    checked = 0
    for n in range(3, 9):
        ramp = list(range(n))
        for x in itertools.product((1, 2, 3, 4), repeat=n):
            if x[0] == x[-1] and len(set(x)) == 1:
                with pytest.raises(ConstantInput):
                    spearman(list(x), ramp)
                continue
            expected = _oracle_rho(x, ramp)
            assert abs(spearman(list(x), ramp) - expected) < 1e-9, (x, ramp)
            assert abs(spearman(ramp, list(x)) - expected) < 1e-9, (ramp, x)
            checked += 1
    assert checked == sum(4**n - 4 for n in range(3, 9))


# ---------------------------------------------------------------------------
# 5. workflow invariants under randomized operation sequences with faults
# ---------------------------------------------------------------------------

FIRST_NAMES = ["axle knock", "hot box", "brake drag", "door jam", "wheel flat"]


class _Workload:
    """One randomized operation sequence against a fresh store stack."""

    def __init__(self, path: Path, rng: random.Random):
        self.path = path
        self.rng = rng
        self.log = AppendLog(path, fsync=False)
        self.events = EventStore(self.log, now=lambda: T0)
        self.labels = LabelRegistry(self.log)
        self.engine = AnnotationEngine(
            self.log, self.events, self.labels, now=lambda: T0
        )
        self.labels.seed_defaults()
        self.keys: list[tuple[str, str]] = []  # (kind, key) already ingested
        self.known_event_ids: list[str] = []
        self.created_names: list[tuple[str, str]] = []  # (context, name)
        self.faulted = False

    # -- operations -------------------------------------------------------

    def op_ingest(self):
        reuse = self.keys and self.rng.random() < 0.3
        if reuse:
            kind, key = self.rng.choice(self.keys)
        else:
            kind = self.rng.choice(("ride", "visit"))
            key = f"k{self.rng.randrange(10**9)}"
        if kind == "ride":
            event, created = self.events.ingest_button_press(
                train_id="t1",
                occurred_at=T0 - timedelta(minutes=self.rng.randrange(1, 600)),
                location=GeoPoint(53.0, 12.0),
                external_key=key,
            )
        else:
            entered = T0 - timedelta(hours=self.rng.randrange(2, 50))
            event, created = self.events.ingest_workshop_visit(
                train_car_id="c1",
                entered_at=entered,
                exited_at=entered + timedelta(hours=1),
                external_key=key,
            )
        assert created == (not reuse), "created flag must mirror key novelty"
        if reuse:
            assert event.event_id in self.known_event_ids
        else:
            self.keys.append((kind, key))
            self.known_event_ids.append(event.event_id)

    def op_create_label(self):
        context = self.rng.choice(("fault_found", "repair_done", "rail_event"))
        duplicate = self.created_names and self.rng.random() < 0.3
        if duplicate:
            context, base = self.rng.choice(self.created_names)
            name = self._mangle(base)
            with pytest.raises(DuplicateLabel):
                self.labels.create_label(name, context, "usx")
        else:
            name = f"{self.rng.choice(FIRST_NAMES)} {self.rng.randrange(10**6)}"
            label = self.labels.create_label(name, context, "usx")
            assert label.name == name.strip()
            self.created_names.append((context, name))

    def _mangle(self, name: str) -> str:
        out = "".join(
            c.upper() if self.rng.random() < 0.5 else c.lower() for c in name
        )
        return " " * self.rng.randrange(3) + out + " " * self.rng.randrange(3)

    def op_stage(self):
        if not self.known_event_ids:
            return
        event_id = self.rng.choice(self.known_event_ids)
        event = self.events.get_event(event_id)
        selections = {}
        for context in CONTEXTS_BY_EVENT[event.context]:
            pool = self.labels.list_labels(context)
            take = self.rng.randrange(0, min(3, len(pool)) + 1) if pool else 0
            selections[context] = [
                l.label_id for l in self.rng.sample(pool, take)
            ]
        self.engine.stage_draft(event_id, selections, f"us{self.rng.randrange(3)}")

    def op_submit(self):
        drafts = [d for d in self.engine._drafts.values() if not d.is_empty()]
        if not drafts:
            return
        draft = self.rng.choice(drafts)
        key = (draft.annotator, draft.event_id)
        if self.rng.random() < 0.15:
            before = len(self.engine.annotations)
            was_labeled = self.events.get_event(draft.event_id).labeled

            def torn_write(file, data):
                file.write(data[: len(data) // 2])
                raise OSError("injected")

            self.log.set_write_hook(torn_write)
            try:
                with pytest.raises(StorageFailure):
                    self.engine.submit(draft)
            finally:
                self.log.set_write_hook(None)
            self.faulted = True
            # the failed submit must not leave any trace
            assert len(self.engine.annotations) == before
            assert self.engine._drafts.get(key) is draft
            assert self.events.get_event(draft.event_id).labeled == was_labeled
        else:
            annotation = self.engine.submit(draft)
            assert annotation.event_id == draft.event_id
            assert self.events.get_event(draft.event_id).labeled
            assert key not in self.engine._drafts

    # -- invariants ---------------------------------------------------------

    def check_invariants(self):
        referenced = {a.event_id for a in self.engine.annotations}
        for context in ("rail", "train_car"):
            for event in self.events.list_events(context, "all"):
                assert event.labeled == (event.event_id in referenced)
        total = len(self.events.list_events("rail", "all")) + len(
            self.events.list_events("train_car", "all")
        )
        assert total == len(self.keys), "one event per distinct idempotency key"
        for context in ("fault_found", "repair_done", "rail_event"):
            names = [fold(l.name) for l in self.labels.list_labels(context)]
            assert len(names) == len(set(names)), "folded uniqueness"

    def snapshot(self):
        return {
            "events": sorted(
                json.dumps(e.as_dict(), sort_keys=True)
                for context in ("rail", "train_car")
                for e in self.events.list_events(context, "all")
            ),
            "labels": [
                l.as_dict()
                for context in ("fault_found", "repair_done", "rail_event")
                for l in self.labels.list_labels(context)
            ],
            "export": list(self.engine.export_training_records()),
        }

    def reload_and_compare(self):
        expected = self.snapshot()
        self.log.close()
        log = AppendLog(self.path, fsync=False)
        events = EventStore(log, now=lambda: T0)
        labels = LabelRegistry(log)
        engine = AnnotationEngine(log, events, labels, now=lambda: T0)
        appliers = {
            "ride_event": events.apply,
            "train_car_event": events.apply,
            "label": labels.apply,
            "annotation": engine.apply,
        }
        for record in log.replay():
            appliers[record.kind](record)
        labels.seed_defaults()
        rebuilt = _Workload.snapshot(
            type("S", (), {"events": events, "labels": labels, "engine": engine})()
        )
        assert rebuilt == expected, "state must survive restart byte-for-byte"
        log.close()

    def run(self):
        ops = [self.op_ingest, self.op_create_label, self.op_stage, self.op_submit]
        weights = [3, 2, 3, 3]
        for _ in range(self.rng.randrange(4, 15)):
            self.rng.choices(ops, weights)[0]()
        self.check_invariants()
        return self.faulted


def test_c5_workflow_invariants_randomized():
    base = Path("/dev/shm") if os.access("/dev/shm", os.W_OK) else None
    if base is None:
        workdir = Path(".") / f"c5-{uuid.uuid4().hex}"
    else:
        workdir = base / f"c5-{uuid.uuid4().hex}"
    workdir.mkdir()
    rng = random.Random(20250520)
    sequences = 10_000
    try:
        path = workdir / "log.jsonl"
        for i in range(sequences):
            workload = _Workload(path, rng)
            try:
                faulted = workload.run()
                if faulted or i % 4 == 0:
                    workload.reload_and_compare()
                else:
                    workload.log.close()
            finally:
                path.unlink(missing_ok=True)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


# ---------------------------------------------------------------------------
# 6. counterbalancing and the round cap
# ---------------------------------------------------------------------------


def test_c6_counterbalancing_and_round_cap(tmp_path):
    log = AppendLog(tmp_path / "study.jsonl", fsync=False)
    manager = StudyManager(log, tasks=(), now=lambda: T0)
    groups = [
        manager.start_session({"participant_id": f"p{i}"}).group for i in range(40)
    ]
    assert groups.count("workshop_first") == 20
    assert groups.count("rails_first") == 20

    rng = random.Random(99)
    cap_plus_grace = 600.0 + 2.0
    for session in manager.sessions():
        for kind in session.round_order:
            start = T0 + timedelta(seconds=rng.uniform(0, 120))
            manager.record_interaction(session.session_id, kind, start, "success", "go")
            close_at = start + timedelta(seconds=rng.uniform(0, 1800))
            closed = manager.close_round(session.session_id, kind, close_at)
            requested = (close_at - start).total_seconds()
            assert closed.duration_seconds <= cap_plus_grace + 1e-9
            assert closed.duration_seconds == pytest.approx(
                min(requested, cap_plus_grace)
            )
    log.close()


# ---------------------------------------------------------------------------
# 7. durability: acknowledged mutations survive a kill at any byte offset
# ---------------------------------------------------------------------------


def test_c7_durability_kill_and_restart(tmp_path):
    path = tmp_path / "log.jsonl"
    log = AppendLog(path)
    events = EventStore(log, now=lambda: T0)
    labels = LabelRegistry(log)
    engine = AnnotationEngine(log, events, labels, now=lambda: T0)
    labels.seed_defaults()

    event, _ = events.ingest_button_press(
        train_id="t1",
        occurred_at=T0 - timedelta(hours=1),
        location=GeoPoint(53.3, 12.1),
        external_key="r1",
    )
    labels.create_label("screech", "rail_event", "us1")
    label = labels.list_labels("rail_event")[0]
    engine.stage_draft(event.event_id, {"rail_event": [label.label_id]}, "us1")
    draft = engine.get_draft("us1", event.event_id)
    engine.submit(draft)
    log.close()

    baseline = list(read_log(path))
    assert len(baseline) >= 9  # seeds + event + label + annotation

    # map every record to the offset where its line ends; every acknowledged
    # append corresponds to exactly one complete line
    line_ends = []
    with open(path, "rb") as f:
        data = f.read()
    position = 0
    for line in data.splitlines(keepends=True):
        position += len(line)
        line_ends.append(position)
    assert line_ends[-1] == len(data)

    # kill at every interesting byte offset: each line boundary, one byte
    # after it, and the middle of each line
    cut_points = {0, len(data)}
    previous = 0
    for end in line_ends:
        cut_points.update({end, min(end + 1, len(data)), (previous + end) // 2})
        previous = end

    for cut in sorted(cut_points):
        variant = tmp_path / "variant.jsonl"
        variant.write_bytes(data[:cut])
        survivors = list(read_log(variant))
        expected = sum(1 for end in line_ends if end <= cut)
        assert len(survivors) == expected, f"cut at {cut}"
        assert survivors == baseline[:expected]
        # the healed log accepts new appends after a restart
        healed = AppendLog(variant)
        replayed = list(healed.replay())
        assert replayed == baseline[:expected]
        healed.append("label", f"lb-{cut}", None, {"probe": cut})
        healed.close()
        assert len(list(read_log(variant))) == expected + 1
        variant.unlink()

    # a crash during the write itself: the failed append is rolled back,
    # everything acknowledged before it survives a reopen
    log = AppendLog(path)
    list(log.replay())

    def torn_write(file, payload):
        file.write(payload[: len(payload) // 3])
        raise OSError("injected crash")

    log.set_write_hook(torn_write)
    with pytest.raises(StorageFailure):
        log.append("label", "lbdoomed", None, {"name": "ghost"})
    log.set_write_hook(None)
    log.close()
    assert list(read_log(path)) == baseline

    # garbage tails (torn JSON, with or without newline) heal on restart;
    # corruption in the middle of the file refuses to start instead
    path.write_bytes(data + b'{"kind": "label", "oops"')
    assert list(AppendLog(path).replay()) == baseline
    path.write_bytes(data + b"garbage line\n")
    assert list(AppendLog(path).replay()) == baseline
    lines = data.splitlines(keepends=True)
    lines[1] = b"<<corrupt>>\n"
    path.write_bytes(b"".join(lines))
    with pytest.raises(StorageFailure):
        list(AppendLog(path).replay())


# ---------------------------------------------------------------------------
# 8. browser-level flows, delegated to the UI package's own test suite
# ---------------------------------------------------------------------------


def test_c8_ui_flows():
    frontend = Path(__file__).resolve().parents[1] / "frontend"
    if not (frontend / "package.json").exists():
        pytest.skip("frontend package not present")
    if shutil.which("npm") is None:
        pytest.skip("npm not available")
    if not (frontend / "node_modules").exists():
        pytest.skip("frontend dependencies not installed (run npm install)")
    proc = subprocess.run(
        ["npm", "test", "--silent", "--", "--run"],
        cwd=frontend,
        capture_output=True,
        text=True,
        timeout=600,
    )
    assert proc.returncode == 0, f"\n--- stdout ---\n{proc.stdout}\n--- stderr ---\n{proc.stderr}"
