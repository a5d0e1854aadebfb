"""HTTP service and file-backed session storage.

The service is a thin shell: every endpoint is a composition of taxonomy,
questionnaire, engine, and profile operations over an immutable pack
snapshot. Mutations take a per-session lock and persist atomically before
responding, giving each session a single-writer history.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from riskscope import packs, profiles
from riskscope.engine import EngineConfig, PotentialRiskReport, evaluate_session, render_markdown, report_to_dict
from riskscope.errors import RiskscopeError
from riskscope.profiles import ProfileStore, UnknownProfileError, attach_profile, save_profile
from riskscope.questionnaire import (
    AssessmentSession,
    QuestionnaireSet,
    active_answers,
    completeness,
    new_session,
    next_questions,
    record_answer,
    session_from_json,
    session_to_json,
)
from riskscope.taxonomy import EntityKind, TaxonomyPack

DEFAULT_HOME = Path(".riskscope")

_STATUS_FOR_CODE = {
    "unknown-session": 404,
    "unknown-risk": 404,
    "unknown-profile": 404,
    "unknown-stage": 404,
    "unknown-question": 400,
    "kind-mismatch": 400,
    "type-mismatch": 400,
    "parse-error": 400,
    "validation-error": 400,
    "cross-reference-error": 400,
    "no-extractable-answers": 400,
    "ineligible-question": 409,
    "conflict": 409,
    "pack-mismatch": 409,
    "stale-pack": 409,
    "io-failure": 500,
}


class UnknownSessionError(RiskscopeError):
    code = "unknown-session"


class SessionStore:
    """One JSON file per session under ``<home>/sessions``."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def _path(self, session_id: str) -> Path:
        return self.root / f"{profiles.sanitize_entity_id(session_id)}.json"

    def save(self, session: AssessmentSession) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self._path(session.session_id)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(session_to_json(session), encoding="utf-8")
        tmp.replace(path)

    def load(self, session_id: str) -> AssessmentSession:
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSessionError(f"no session with id {session_id!r}")
        return session_from_json(path.read_text(encoding="utf-8"))

    def list_ids(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(path.stem for path in self.root.glob("*.json"))


@dataclass
class ServiceState:
    pack: TaxonomyPack
    questionnaires: QuestionnaireSet
    rules: tuple
    config: EngineConfig
    sessions: SessionStore
    profiles: ProfileStore
    _locks: dict[str, threading.Lock] = field(default_factory=dict)
    _locks_guard: threading.Lock = field(default_factory=threading.Lock)

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def report(self, session: AssessmentSession) -> PotentialRiskReport:
        return evaluate_session(session, self.pack, self.questionnaires, self.rules, self.config)


def build_session_view(state: ServiceState, session: AssessmentSession) -> dict:
    """Pure projection of (packs, rules, session) for clients."""
    report = state.report(session)
    active = active_answers(session, state.questionnaires)
    views = []
    for questionnaire in state.questionnaires.questionnaires:
        part = completeness(questionnaire, session)
        views.append(
            {
                "id": questionnaire.id,
                "title": questionnaire.title,
                "stage": questionnaire.stage,
                "role": questionnaire.role,
                "completeness": {
                    "answered": list(part.answered),
                    "eligible_unanswered": list(part.eligible_unanswered),
                    "withheld": list(part.withheld),
                },
                "eligible_questions": [
                    {
                        "id": question.id,
                        "prompt": question.prompt,
                        "guidance": question.guidance,
                        "kind": question.kind.value,
                        "options": list(question.options),
                        "purpose": question.purpose.value,
                    }
                    for question in next_questions(questionnaire, session)
                ],
            }
        )
    return {
        "session_id": session.session_id,
        "use_title": session.use_title,
        "pack_hash": session.pack_hash,
        "questionnaires": views,
        "answers": {
            qid: {"value": record.value, "provenance": record.provenance, "actor": record.actor}
            for qid, record in active.items()
        },
        "attached_profiles": [
            {"entity_kind": ref.entity_kind, "entity_id": ref.entity_id, "profile_hash": ref.profile_hash}
            for ref in session.attached_profiles()
        ],
        "report_summary": [
            {"risk_id": entry.risk_id, "name": entry.name, "status": entry.status} for entry in report.risks
        ],
    }


def create_state(
    home: Path | None = None,
    *,
    pack_file: Path | None = None,
    questionnaires_file: Path | None = None,
    rules_file: Path | None = None,
    config: EngineConfig | None = None,
) -> ServiceState:
    home = Path(home) if home is not None else DEFAULT_HOME
    bundle = packs.load_bundled(pack_file, questionnaires_file, rules_file)
    return ServiceState(
        pack=bundle.pack,
        questionnaires=bundle.questionnaires,
        rules=bundle.rules,
        config=config or EngineConfig(),
        sessions=SessionStore(home / "sessions"),
        profiles=ProfileStore(home / "profiles"),
    )


def create_app(state: ServiceState | None = None, ui_dir: Path | None = None, **state_kwargs) -> FastAPI:
    state = state or create_state(**state_kwargs)
    app = FastAPI(title="riskscope", docs_url=None, redoc_url=None)
    app.state.riskscope = state

    @app.exception_handler(RiskscopeError)
    async def _riskscope_error(_request: Request, exc: RiskscopeError):
        return JSONResponse(status_code=_STATUS_FOR_CODE.get(exc.code, 400), content=exc.to_payload())

    @app.get("/packs")
    def get_packs():
        return {
            "taxonomy": {
                "version": state.pack.version,
                "content_hash": state.pack.content_hash,
                "stages": [
                    {"id": s.id, "display_name": s.display_name, "description": s.description}
                    for s in state.pack.stages
                ],
                "roles": [
                    {"id": r.id, "display_name": r.display_name, "description": r.description}
                    for r in state.pack.roles
                ],
                "risks": [
                    {
                        "id": r.id,
                        "name": r.name,
                        "description": r.description,
                        "entities": [e.value for e in r.entities],
                        "stages": list(r.stages),
                    }
                    for r in state.pack.risks
                ],
            },
            "questionnaires": [
                {
                    "id": qn.id,
                    "title": qn.title,
                    "stage": qn.stage,
                    "role": qn.role,
                    "questions": [
                        {
                            "id": q.id,
                            "prompt": q.prompt,
                            "guidance": q.guidance,
                            "kind": q.kind.value,
                            "options": list(q.options),
                            "purpose": q.purpose.value,
                            "gate": q.gate_text,
                        }
                        for q in qn.questions
                    ],
                }
                for qn in state.questionnaires.questionnaires
            ],
            "rules": [
                {"id": r.id, "risk_id": r.risk_id, "condition": r.condition_text, "rationale": r.rationale}
                for r in state.rules
            ],
        }

    @app.post("/sessions", status_code=201)
    async def post_session(request: Request):
        body = await _json_body(request)
        use_title = body.get("use_title", "")
        session = new_session(use_title, state.pack.content_hash)
        state.sessions.save(session)
        return build_session_view(state, session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return build_session_view(state, state.sessions.load(session_id))

    @app.post("/sessions/{session_id}/answers")
    async def post_answer(session_id: str, request: Request):
        body = await _json_body(request)
        with state.session_lock(session_id):
            session = state.sessions.load(session_id)
            question_id = body.get("question_id", "")
            role = body.get("role") or state.questionnaires.find(question_id)[0].role
            session = record_answer(session, state.questionnaires, question_id, body.get("value", ""), role)
            state.sessions.save(session)
        return build_session_view(state, session)

    @app.post("/sessions/{session_id}/profiles")
    async def post_profile_attach(session_id: str, request: Request):
        body = await _json_body(request)
        entity_kind = _entity_kind(body.get("entity_kind", ""))
        entity_id = body.get("entity_id", "")
        with state.session_lock(session_id):
            session = state.sessions.load(session_id)
            if body.get("profile_hash"):
                profile = state.profiles.load(entity_kind, entity_id, body["profile_hash"])
            else:
                profile = state.profiles.latest(entity_kind, entity_id)
                if profile is None:
                    raise UnknownProfileError(f"no stored profile for {entity_kind.value} {entity_id!r}")
            session = attach_profile(session, profile, state.questionnaires)
            state.sessions.save(session)
        return build_session_view(state, session)

    @app.post("/sessions/{session_id}/save-profile")
    async def post_profile_save(session_id: str, request: Request):
        body = await _json_body(request)
        entity_kind = _entity_kind(body.get("entity_kind", ""))
        session = state.sessions.load(session_id)
        profile = save_profile(
            state.profiles,
            session,
            state.pack,
            state.questionnaires,
            entity_kind,
            body.get("entity_id", ""),
            actor=body.get("actor", ""),
        )
        return {
            "entity_kind": profile.entity_kind.value,
            "entity_id": profile.entity_id,
            "profile_hash": profile.profile_hash,
            "answers": dict(profile.answers),
        }

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str, format: str = "json"):
        session = state.sessions.load(session_id)
        report = state.report(session)
        if format == "markdown":
            return PlainTextResponse(render_markdown(report), media_type="text/markdown")
        return report_to_dict(report)

    @app.get("/profiles")
    def get_profiles():
        return {"profiles": state.profiles.list_entries()}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _entity_kind(value: str) -> EntityKind:
    try:
        return EntityKind(value)
    except ValueError:
        raise _BadRequest(f"unknown entity kind {value!r}") from None


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except json.JSONDecodeError:
        raise _BadRequest("request body must be a JSON object") from None
    if not isinstance(body, dict):
        raise _BadRequest("request body must be a JSON object")
    return body


class _BadRequest(RiskscopeError):
    code = "validation-error"
