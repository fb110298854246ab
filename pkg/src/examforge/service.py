"""HTTP API over the drafting loop.

One JSON error shape everywhere: ``{"error": {http_status, machine_code,
human_message, details}}``. Handlers are synchronous on purpose; the
framework runs them on its thread pool and a per-session lock serializes
the loop, so two concurrent steps on one session cannot interleave.

Sessions are rebuilt lazily from their transcripts, which makes the
process restartable without losing state. Accepting takes the advisory
bank lock, re-reads the bank, commits usage, and writes it back, so two
processes pointing at one bank directory cannot lose updates.
"""

from __future__ import annotations

import os
import secrets
import threading
from datetime import date
from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, Query, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse

from . import wire
from .bank import Bank, bank_lock, load_bank, query_problems, save_bank
from .composer import default_meta, render_exam, render_solutions
from .errors import (
    BadRequestError,
    BlueprintError,
    ExamForgeError,
    NoDraftError,
    error_payload,
)
from .session import Session, SessionStore, new_session

SESSIONS_DIRNAME = "sessions"


class ServiceState:
    """Bank cache plus the in-memory session registry."""

    def __init__(self, bank_path: str | Path):
        self.bank_path = Path(bank_path)
        self._guard = threading.Lock()
        self._bank: Bank | None = None
        self._bank_stamp: int | None = None
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}

    def _manifest_path(self) -> Path:
        p = self.bank_path
        return p if p.name == "bank.json" else p / "bank.json"

    def bank(self) -> Bank:
        try:
            stamp = self._manifest_path().stat().st_mtime_ns
        except OSError:
            stamp = None
        with self._guard:
            if self._bank is None or stamp is None or stamp != self._bank_stamp:
                self._bank = load_bank(self.bank_path)
                self._bank_stamp = stamp
            return self._bank

    def invalidate_bank(self) -> None:
        with self._guard:
            self._bank = None

    def store(self) -> SessionStore:
        return SessionStore(Path(self.bank().root) / SESSIONS_DIRNAME)

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def register(self, session: Session) -> None:
        with self._guard:
            self._sessions[session.id] = session

    def session(self, session_id: str) -> Session:
        with self._guard:
            cached = self._sessions.get(session_id)
        if cached is not None:
            return cached
        loaded = self.store().load(session_id, self.bank())
        with self._guard:
            return self._sessions.setdefault(session_id, loaded)


def _session_view(session: Session) -> dict[str, Any]:
    return {
        "session_id": session.id,
        "status": session.status,
        "base_seed": wire.seed_to_json(session.base_seed),
        "bank_ref": session.bank_ref,
        "blueprint": wire.blueprint_to_json(session.blueprint),
        "steps": [
            wire.step_to_json(session.bank, session.blueprint, s)
            for s in session.steps
        ],
    }


def create_app(bank_path: str | Path | None = None) -> FastAPI:
    path = bank_path or os.environ.get("EXAMFORGE_BANK")
    if not path:
        raise ExamForgeError("no bank given: pass a path or set EXAMFORGE_BANK")
    state = ServiceState(path)
    app = FastAPI(
        title="examforge API",
        docs_url="/api/docs",
        openapi_url="/api/openapi.json",
    )
    app.state.forge = state

    @app.exception_handler(ExamForgeError)
    def _domain_error(request: Request, exc: ExamForgeError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status, content={"error": error_payload(exc)}
        )

    @app.exception_handler(RequestValidationError)
    def _request_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content={
                "error": {
                    "http_status": 422,
                    "machine_code": "request_invalid",
                    "human_message": "request validation failed",
                    "details": jsonable_encoder(exc.errors()),
                }
            },
        )

    @app.get("/api/bank/problems")
    def list_problems(
        subarea: str | None = None,
        min_points: int | None = None,
        max_points: int | None = None,
        ilo: str | None = None,
        solo_level: int | None = None,
        unused_since: date | None = None,
        include: str | None = None,
    ) -> dict[str, Any]:
        # fragment bodies stay out of listings unless explicitly requested
        if include not in (None, "body"):
            raise BadRequestError(f"unsupported include value {include!r}")
        bank = state.bank()
        rows = query_problems(
            bank,
            subarea=subarea,
            min_points=min_points,
            max_points=max_points,
            ilo=ilo,
            solo_level=solo_level,
            unused_since=unused_since,
        )
        with_body = include == "body"
        return {
            "bank_ref": bank.digest(),
            "subareas": dict(bank.subareas),
            "problems": [wire.problem_to_json(p, include_body=with_body) for p in rows],
        }

    @app.get("/api/bank/problems/{problem_id}")
    def get_problem(problem_id: str) -> dict[str, Any]:
        bank = state.bank()
        return {
            "bank_ref": bank.digest(),
            "problem": wire.problem_to_json(bank.problem(problem_id), include_body=True),
        }

    @app.post("/api/sessions", status_code=201)
    def create_session(payload: dict[str, Any] = Body(...)) -> dict[str, Any]:
        if "blueprint" not in payload:
            raise BlueprintError("request body must carry a blueprint object")
        blueprint = wire.blueprint_from_json(payload["blueprint"])
        if "base_seed" in payload:
            seed = wire.seed_from_json(payload["base_seed"], "base_seed")
        else:
            seed = secrets.randbits(64)
        bank = state.bank()
        session = new_session(blueprint, bank, seed, store=state.store())
        state.register(session)
        return {
            "session_id": session.id,
            "status": session.status,
            "base_seed": wire.seed_to_json(seed),
            "bank_ref": session.bank_ref,
            "blueprint": wire.blueprint_to_json(blueprint),
        }

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict[str, Any]:
        session = state.session(session_id)
        with state.lock_for(session_id):
            return _session_view(session)

    @app.post("/api/sessions/{session_id}/step")
    def step_session(
        session_id: str,
        payload: dict[str, Any] | None = Body(default=None),
    ) -> dict[str, Any]:
        session = state.session(session_id)
        with state.lock_for(session_id):
            if payload and "decision_vector" in payload:
                dv = wire.dv_from_json(payload["decision_vector"])
            else:
                dv = session.latest_dv
            step = session.step(dv)
            out: dict[str, Any] = {"session_id": session.id, "status": session.status}
            out.update(wire.step_to_json(session.bank, session.blueprint, step))
            return out

    @app.post("/api/sessions/{session_id}/accept")
    def accept_session(session_id: str) -> dict[str, Any]:
        session = state.session(session_id)
        with state.lock_for(session_id):
            root = state.bank().root
            with bank_lock(root):
                fresh = load_bank(root)
                session.accept(fresh, persist=save_bank)
            state.invalidate_bank()
            draft = session.latest_draft()
            return {
                "session_id": session.id,
                "status": session.status,
                "assignment": list(draft.assignment),
                "exam_date": session.blueprint.exam_date.isoformat(),
            }

    @app.post("/api/sessions/{session_id}/abandon")
    def abandon_session(session_id: str) -> dict[str, Any]:
        session = state.session(session_id)
        with state.lock_for(session_id):
            session.abandon()
            return {"session_id": session.id, "status": session.status}

    @app.get("/api/sessions/{session_id}/render")
    def render_session(
        session_id: str,
        kind: str = Query("exam"),
        format: str = Query("text"),
    ) -> Any:
        if kind not in ("exam", "solutions"):
            raise BadRequestError(f"kind must be exam or solutions, got {kind!r}")
        if format not in ("text", "json"):
            raise BadRequestError(f"format must be text or json, got {format!r}")
        session = state.session(session_id)
        with state.lock_for(session_id):
            draft = session.latest_draft()
            if draft is None:
                raise NoDraftError(
                    f"session {session.id} has no successful draft to render"
                )
            meta = default_meta(session.blueprint)
            if kind == "exam":
                doc = render_exam(draft, session.bank, meta)
            else:
                doc = render_solutions(draft, session.bank, meta)
        if format == "json":
            return {
                "kind": doc.kind,
                "content": doc.content,
                "warnings": list(doc.warnings),
            }
        return PlainTextResponse(doc.content)

    ui_dir = os.environ.get("EXAMFORGE_UI_DIR")
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
