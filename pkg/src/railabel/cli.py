"""Command line entry points: serve, export, replay, score."""

from __future__ import annotations

import json
import os
import sys
import threading
from pathlib import Path

import click

from .annotations import KIND_ANNOTATION, AnnotationEngine
from .config import load_config
from .errors import InsufficientData, RailabelError, StorageFailure
from .events import KIND_RIDE, KIND_TRAIN_CAR, EventStore
from .labels import KIND_LABEL, LabelRegistry
from .replay import replay_scenario
from .scoring import (
    correlate_study,
    default_definitions,
    load_definitions,
    score_responses,
)
from .storage import read_log


class _ReadOnlyLog:
    """Log stand-in for rebuilding state from a file without owning it."""

    def __init__(self):
        self.mutation_lock = threading.RLock()

    def append(self, *args, **kwargs):
        raise StorageFailure("this store was rebuilt read-only")


def _rebuild_annotation_state(data_dir: Path):
    """Project the annotation-relevant records of a log into fresh stores."""
    shim = _ReadOnlyLog()
    events = EventStore(shim)
    labels = LabelRegistry(shim)
    engine = AnnotationEngine(shim, events, labels)
    appliers = {
        KIND_RIDE: events.apply,
        KIND_TRAIN_CAR: events.apply,
        KIND_LABEL: labels.apply,
        KIND_ANNOTATION: engine.apply,
    }
    for record in read_log(data_dir / "log.jsonl"):
        apply = appliers.get(record.kind)
        if apply is not None:
            apply(record)
    return engine


def _default_data_dir() -> str:
    return os.environ.get("APP_DATA_DIR", "./data")


@click.group()
def main():
    """Event labeling service for rail maintenance, with a study harness."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config file (defaults are built in).")
@click.option("--data-dir", default=_default_data_dir, show_default="./data",
              help="Directory holding the append-only log.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=lambda: int(os.environ.get("APP_PORT", "8000")),
              show_default="8000")
def serve(config_path, data_dir, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    app = create_app(config, Path(data_dir))
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--data-dir", default=_default_data_dir, show_default="./data",
              help="Directory holding the append-only log.")
@click.option("--since", default=None,
              help="Only annotations submitted at or after this time "
                   "(ISO-8601 or epoch seconds).")
@click.option("--out", type=click.Path(dir_okay=False), default="-",
              show_default=True, help="Output file; - writes to stdout.")
def export(data_dir, since, out):
    """Write training records as JSON lines."""
    engine = _rebuild_annotation_state(Path(data_dir))
    records = list(engine.export_training_records(since))
    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    if out == "-":
        for line in lines:
            click.echo(line)
    else:
        Path(out).write_text("".join(l + "\n" for l in lines), "utf-8")
        click.echo(f"wrote {len(records)} training records to {out}")


@main.command()
@click.option("--scenario", default="default", show_default=True,
              help="Scenario name or path to a scenario JSON file.")
@click.option("--target", required=True, help="Base URL of a running service.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False),
              default=None, help="Write the full replay report as JSON.")
def replay(scenario, target, report_path):
    """Replay a scripted scenario against a service and check outcomes."""
    result = replay_scenario(scenario, target)
    for task in result.tasks:
        click.echo(f"task {task.task_id}: {'PASS' if task.passed else 'FAIL'}")
        for check in task.checks:
            if not check.passed:
                click.echo(f"  - {check.description}: {check.detail}")
    ec = result.export_check
    click.echo(
        f"export check: {'PASS' if ec.get('passed') else 'FAIL'} "
        f"({ec.get('records', 0)}/{ec.get('expected_records', 0)} records)"
    )
    for note in result.notes:
        click.echo(f"note: {note}")
    if report_path:
        Path(report_path).write_text(
            json.dumps(result.as_dict(), indent=2, ensure_ascii=False) + "\n", "utf-8"
        )
    if not result.passed:
        sys.exit(1)


@main.command()
@click.option("--sessions", "sessions_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Session export JSON (a list, or an object with a "
                   "'sessions' list).")
@click.option("--definitions", "definitions_dir", type=click.Path(file_okay=False),
              default=None, help="Directory of questionnaire definition files "
                                 "(packaged templates by default).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Also write the report as JSON to this file.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]),
              default="table", show_default=True)
def score(sessions_path, definitions_dir, out, fmt):
    """Score questionnaires and correlate them across study sessions."""
    raw = json.loads(Path(sessions_path).read_text("utf-8"))
    sessions = raw["sessions"] if isinstance(raw, dict) else raw
    definitions = (
        load_definitions(definitions_dir) if definitions_dir else default_definitions()
    )
    report = {"sessions": [], "correlations": None}
    for session in sessions:
        entry = {
            "session_id": session.get("session_id"),
            "participant_id": session.get("participant", {}).get("participant_id"),
            "scores": {},
        }
        for q in session.get("questionnaires", []):
            definition = definitions.get(q["instrument"])
            if definition is None:
                continue
            key = q["instrument"] + (f"_{q['round']}" if q.get("round") else "")
            try:
                entry["scores"][key] = score_responses(definition, q["responses"])
            except RailabelError as exc:
                entry["scores"][key] = {"error": exc.code}
        report["sessions"].append(entry)
    try:
        report["correlations"] = correlate_study(sessions, definitions)
    except InsufficientData as exc:
        report["correlations"] = {"status": "insufficient_data", "message": exc.message}

    if fmt == "json":
        click.echo(json.dumps(report, indent=2, ensure_ascii=False))
    else:
        _print_score_table(report)
    if out:
        Path(out).write_text(
            json.dumps(report, indent=2, ensure_ascii=False) + "\n", "utf-8"
        )


def _print_score_table(report: dict) -> None:
    for entry in report["sessions"]:
        click.echo(f"session {entry['session_id']} "
                   f"(participant {entry['participant_id']})")
        for key, value in sorted(entry["scores"].items()):
            if isinstance(value, dict):
                parts = ", ".join(
                    f"{k}={v:+.2f}" if isinstance(v, (int, float)) else f"{k}={v}"
                    for k, v in value.items()
                )
                click.echo(f"  {key}: {parts}")
            else:
                click.echo(f"  {key}: {value:.2f}")
    correlations = report["correlations"]
    if correlations is None:
        return
    if correlations.get("status") == "insufficient_data":
        click.echo("correlations: insufficient data")
        return
    click.echo(f"correlations over {correlations['n_sessions']} sessions:")
    header = f"  {'x':<5} {'y':<20} {'scope':<10} {'n':>4}  rho"
    click.echo(header)
    for e in correlations["entries"]:
        rho = "n/a (constant)" if e["rho"] is None else f"{e['rho']:+.3f}"
        click.echo(f"  {e['x']:<5} {e['y']:<20} {e['scope']:<10} {e['n']:>4}  {rho}")


if __name__ == "__main__":
    main()
