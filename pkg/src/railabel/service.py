"""HTTP facade over the stores, with role-based access control.

One :class:`ServiceState` owns the append-only log and every in-memory
store; the FastAPI app is a thin layer of request parsing, token checks and
response shaping. Rebuilding state from disk happens once, in the
ServiceState constructor, by replaying the log through the stores' appliers.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from fastapi import Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import auth as authmod
from .annotations import KIND_ANNOTATION, AnnotationEngine
from .auth import Annotator, Authenticator, annotator_from_config
from .config import AppConfig
from .errors import (
    BadDefinition,
    Forbidden,
    InsufficientData,
    InvalidRequest,
    RailabelError,
    Unauthorized,
)
from .events import KIND_RIDE, KIND_TRAIN_CAR, EventStore, GeoPoint
from .labels import KIND_LABEL, LabelRegistry
from .scenario import ROUND_KINDS, load_scenario
from .scoring import correlate_study, default_definitions, score_responses
from .storage import AppendLog
from .study import (
    KIND_INTERACTION,
    KIND_QUESTIONNAIRE,
    KIND_ROUND_CLOSE,
    KIND_SESSION,
    StudyManager,
)

Timestamp = Union[str, int, float]

# instruments answered once per round vs once per session
ROUND_SCOPED_INSTRUMENTS = {"sus", "ueq"}
SESSION_SCOPED_INSTRUMENTS = {"ati"}


class ServiceState:
    """Everything behind the HTTP surface, wired to one data directory."""

    def __init__(self, config: AppConfig, data_dir: Path | str):
        self.config = config
        self.data_dir = Path(data_dir)
        self.log = AppendLog(self.data_dir / "log.jsonl")
        self.events = EventStore(self.log, clock_skew_seconds=config.clock_skew_seconds)
        self.labels = LabelRegistry(self.log)
        self.engine = AnnotationEngine(self.log, self.events, self.labels)
        self.scenario = load_scenario(config.scenario)
        self.study = StudyManager(
            self.log,
            tasks=self.scenario.tasks,
            round_cap_seconds=config.round_cap_seconds,
            close_grace_seconds=config.close_grace_seconds,
            assignment=config.group_assignment,
            seed=config.group_seed,
        )
        self.definitions = default_definitions()
        self._replay()
        self.labels.seed_defaults()
        self.auth = Authenticator(
            [annotator_from_config(u) for u in config.users],
            token_lifetime_hours=config.token_lifetime_hours,
        )

    def _replay(self) -> None:
        appliers = {
            KIND_RIDE: self.events.apply,
            KIND_TRAIN_CAR: self.events.apply,
            KIND_LABEL: self.labels.apply,
            KIND_ANNOTATION: self.engine.apply,
            KIND_SESSION: self.study.apply,
            KIND_INTERACTION: self.study.apply,
            KIND_ROUND_CLOSE: self.study.apply,
            KIND_QUESTIONNAIRE: self.study.apply,
        }
        for record in self.log.replay():
            apply = appliers.get(record.kind)
            if apply is None:
                raise InvalidRequest(f"unknown record kind in log: {record.kind!r}")
            apply(record)

    def close(self) -> None:
        self.log.close()

    def questionnaire_scores(self, session_id: str) -> dict:
        session = self.study.get_session(session_id)
        scores: dict = {"ati": None, "rounds": {k: {} for k in session.round_order}}
        for (instrument, round_kind), responses in session.questionnaires.items():
            definition = self.definitions.get(instrument)
            if definition is None:
                continue
            value = score_responses(definition, responses)
            if round_kind is None:
                scores[instrument] = value
            else:
                scores["rounds"][round_kind][instrument] = value
        return scores


# -- request bodies -----------------------------------------------------------


class LoginBody(BaseModel):
    username: str
    password: str


class LocationBody(BaseModel):
    latitude: float
    longitude: float


class ButtonPressBody(BaseModel):
    train_id: str
    occurred_at: Timestamp
    location: LocationBody
    external_key: str


class WorkshopVisitBody(BaseModel):
    train_car_id: str
    entered_at: Timestamp
    exited_at: Timestamp
    external_key: str


class LabelBody(BaseModel):
    name: str
    context: str


class DraftBody(BaseModel):
    event_id: str
    selections: dict[str, list[str]]


class ParticipantBody(BaseModel):
    participant_id: str
    age: int
    gender: str = ""
    occupation: str = ""


class SessionBody(BaseModel):
    participant: ParticipantBody
    notes: str = ""


class InteractionBody(BaseModel):
    round: str
    timestamp: Timestamp
    kind: str
    action: str


class CloseBody(BaseModel):
    at: Timestamp


class QuestionnaireBody(BaseModel):
    instrument: str
    round: str | None = None
    responses: list[int]


# -- app ----------------------------------------------------------------------


def create_app(config: AppConfig, data_dir: Path | str) -> FastAPI:
    state = ServiceState(config, data_dir)
    app = FastAPI(title="railabel", version="0.1.0")
    app.state.service = state
    # the browser UI is served separately (vite); same-host deployments
    # don't need this, cross-origin dev setups do
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RailabelError)
    async def domain_error(_request: Request, exc: RailabelError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "invalid_request", "message": str(exc.errors()[:3])},
        )

    def current_annotator(request: Request) -> Annotator:
        header = request.headers.get("authorization", "")
        token = header[7:] if header.lower().startswith("bearer ") else None
        annotator = state.auth.resolve(token)
        if annotator is None:
            raise Unauthorized("missing, invalid, or expired token")
        return annotator

    def require_role(annotator: Annotator, *roles: str) -> None:
        if annotator.role not in roles:
            raise Forbidden(f"role {annotator.role} may not perform this operation")

    def require_label_context(annotator: Annotator, context: str) -> None:
        if annotator.role == authmod.ROLE_EXPERIMENTER:
            return  # read-only oversight; writes are blocked by role checks
        if context not in authmod.ROLE_LABEL_CONTEXTS[annotator.role]:
            raise Forbidden(
                f"role {annotator.role} may not use label context {context}"
            )

    # -- auth -------------------------------------------------------------

    @app.post("/login")
    def login(body: LoginBody):
        token, annotator = state.auth.login(body.username, body.password)
        return {
            "token": token.token,
            "expires_at": token.expires_at.isoformat(),
            "annotator": annotator.as_dict(),
            "dashboard_route": authmod.DASHBOARD_ROUTES[annotator.role],
            "ui": {
                "map_tile_url": state.config.map_tile_url,
                "display_timezone": state.config.display_timezone,
                "locale": state.config.locale,
            },
        }

    # -- events -----------------------------------------------------------

    @app.get("/events")
    def list_events(
        annotator: Annotator = Depends(current_annotator),
        context: str | None = Query(default=None),
        status: str = Query(default="all"),
    ):
        allowed = authmod.ROLE_EVENT_CONTEXTS[annotator.role]
        if context is None:
            if len(allowed) != 1:
                raise InvalidRequest("context query parameter is required")
            context = next(iter(allowed))
        if context in ("train_car", "rail") and context not in allowed:
            raise Forbidden(f"role {annotator.role} may not list {context} events")
        events = state.events.list_events(context, status)
        return {"events": [e.as_dict() for e in events]}

    @app.get("/events/{event_id}")
    def get_event(event_id: str, annotator: Annotator = Depends(current_annotator)):
        event = state.events.get_event(event_id)
        if event.context not in authmod.ROLE_EVENT_CONTEXTS[annotator.role]:
            raise Forbidden(f"role {annotator.role} may not view this event")
        return event.as_dict()

    # -- ingestion ----------------------------------------------------------

    @app.post("/ingest/button-press")
    def ingest_button_press(
        body: ButtonPressBody, annotator: Annotator = Depends(current_annotator)
    ):
        require_role(annotator, authmod.ROLE_EXPERIMENTER)
        event, created = state.events.ingest_button_press(
            train_id=body.train_id,
            occurred_at=body.occurred_at,
            location=GeoPoint(body.location.latitude, body.location.longitude),
            external_key=body.external_key,
        )
        payload = event.as_dict() | {"created": created}
        return JSONResponse(status_code=201 if created else 200, content=payload)

    @app.post("/ingest/workshop-visit")
    def ingest_workshop_visit(
        body: WorkshopVisitBody, annotator: Annotator = Depends(current_annotator)
    ):
        require_role(annotator, authmod.ROLE_EXPERIMENTER)
        event, created = state.events.ingest_workshop_visit(
            train_car_id=body.train_car_id,
            entered_at=body.entered_at,
            exited_at=body.exited_at,
            external_key=body.external_key,
        )
        payload = event.as_dict() | {"created": created}
        return JSONResponse(status_code=201 if created else 200, content=payload)

    # -- labels -------------------------------------------------------------

    @app.get("/labels")
    def list_labels(
        annotator: Annotator = Depends(current_annotator),
        context: str | None = Query(default=None),
    ):
        if context is None:
            raise InvalidRequest("context query parameter is required")
        require_label_context(annotator, context)
        return {"labels": [l.as_dict() for l in state.labels.list_labels(context)]}

    @app.post("/labels", status_code=201)
    def create_label(
        body: LabelBody, annotator: Annotator = Depends(current_annotator)
    ):
        require_role(
            annotator, authmod.ROLE_TRAIN_DRIVER, authmod.ROLE_WORKSHOP_FOREMAN
        )
        require_label_context(annotator, body.context)
        label = state.labels.create_label(
            body.name, body.context, annotator.annotator_id
        )
        return label.as_dict()

    # -- annotation workflow --------------------------------------------------

    @app.post("/drafts")
    def stage_draft(body: DraftBody, annotator: Annotator = Depends(current_annotator)):
        require_role(
            annotator, authmod.ROLE_TRAIN_DRIVER, authmod.ROLE_WORKSHOP_FOREMAN
        )
        event = state.events.get_event(body.event_id)
        if event.context not in authmod.ROLE_EVENT_CONTEXTS[annotator.role]:
            raise Forbidden(f"role {annotator.role} may not annotate this event")
        for context in body.selections:
            require_label_context(annotator, context)
        draft = state.engine.stage_draft(
            body.event_id, body.selections, annotator.annotator_id
        )
        return draft.as_dict()

    @app.get("/drafts/{event_id}/summary")
    def draft_summary(
        event_id: str, annotator: Annotator = Depends(current_annotator)
    ):
        draft = state.engine.get_draft(annotator.annotator_id, event_id)
        return state.engine.verification_summary(draft)

    @app.post("/drafts/{event_id}/submit", status_code=201)
    def submit_draft(
        event_id: str, annotator: Annotator = Depends(current_annotator)
    ):
        draft = state.engine.get_draft(annotator.annotator_id, event_id)
        annotation = state.engine.submit(draft)
        return annotation.as_dict()

    # -- export ----------------------------------------------------------------

    @app.get("/export")
    def export(
        annotator: Annotator = Depends(current_annotator),
        since: str | None = Query(default=None),
    ):
        require_role(annotator, authmod.ROLE_EXPERIMENTER)
        lines = [
            json.dumps(record, ensure_ascii=False)
            for record in state.engine.export_training_records(since)
        ]
        body = "\n".join(lines) + ("\n" if lines else "")
        return PlainTextResponse(body, media_type="application/x-ndjson")

    # -- study -------------------------------------------------------------------

    @app.post("/study/sessions", status_code=201)
    def start_session(
        body: SessionBody, annotator: Annotator = Depends(current_annotator)
    ):
        require_role(annotator, authmod.ROLE_EXPERIMENTER)
        session = state.study.start_session(body.participant.model_dump())
        if body.notes:
            session.notes = body.notes
        return session.as_dict()

    @app.post("/study/sessions/{session_id}/interactions")
    def record_interaction(
        session_id: str,
        body: InteractionBody,
        annotator: Annotator = Depends(current_annotator),
    ):
        state.study.record_interaction(
            session_id, body.round, body.timestamp, body.kind, body.action
        )
        return {"acknowledged": True}

    @app.post("/study/sessions/{session_id}/rounds/{kind}/close")
    def close_round(
        session_id: str,
        kind: str,
        body: CloseBody,
        annotator: Annotator = Depends(current_annotator),
    ):
        round_ = state.study.close_round(session_id, kind, body.at)
        return round_.as_dict()

    @app.post("/study/sessions/{session_id}/questionnaires")
    def record_questionnaire(
        session_id: str,
        body: QuestionnaireBody,
        annotator: Annotator = Depends(current_annotator),
    ):
        definition = state.definitions.get(body.instrument)
        if definition is None:
            raise BadDefinition(f"unknown instrument: {body.instrument!r}")
        if body.instrument in ROUND_SCOPED_INSTRUMENTS:
            if body.round not in ROUND_KINDS:
                raise InvalidRequest(
                    f"instrument {body.instrument} is answered per round"
                )
        elif body.instrument in SESSION_SCOPED_INSTRUMENTS and body.round is not None:
            raise InvalidRequest(
                f"instrument {body.instrument} is answered once per session"
            )
        definition.check_responses(body.responses)
        state.study.record_questionnaire(
            session_id, body.instrument, body.round, body.responses
        )
        return {"recorded": True}

    @app.get("/study/sessions/{session_id}/metrics")
    def session_metrics(
        session_id: str, annotator: Annotator = Depends(current_annotator)
    ):
        require_role(annotator, authmod.ROLE_EXPERIMENTER)
        metrics = state.study.compute_metrics(session_id)
        metrics["questionnaire_scores"] = state.questionnaire_scores(session_id)
        return metrics

    @app.get("/study/report")
    def study_report(
        annotator: Annotator = Depends(current_annotator),
        gender: str | None = Query(default=None),
    ):
        require_role(annotator, authmod.ROLE_EXPERIMENTER)
        sessions = [s.as_dict() for s in state.study.sessions()]
        try:
            correlations = correlate_study(sessions, state.definitions, gender=gender)
        except InsufficientData as exc:
            correlations = {"status": "insufficient_data", "message": exc.message}
        return {
            "group_counts": state.study.group_counts(),
            "sessions": sessions,
            "correlations": correlations,
        }

    return app
