"""HTTP API over the orchestrator, metrics and session store.

Long-running pipeline stages execute on background threads; clients poll
the session resource for phase progress. One mutation at a time per session.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .domain import StudyConfig, ThemeSet, Transcript
from .errors import (
    IllegalPhase, InvalidPayload, IterationCapReached, SessionNotFound,
    ThemekitError, ValidationFailed,
)
from .metrics import ComparisonBasis
from .orchestrator import ExpertDecision, Orchestrator, Phase

DEFAULT_BODY_CAP = 10 * 1024 * 1024  # bytes

_GENERATION_PHASES = (Phase.CONFIGURED, Phase.CHUNKED, Phase.CODED)
_CYCLE_PHASES = (Phase.THEMES_GENERATED, Phase.AWAITING_EXPERT, Phase.EVALUATED)


def _error(status: int, code: str, message: str, detail=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"status": status, "code": code, "message": message,
                 "detail": detail},
    )


def _map_error(e: Exception) -> JSONResponse:
    if isinstance(e, ValidationFailed):
        code = next(iter(sorted(e.fields))) if e.fields else "validation_failed"
        return _error(422, code, str(e), e.fields)
    if isinstance(e, InvalidPayload):
        return _error(422, "invalid_payload", str(e))
    if isinstance(e, IllegalPhase):
        return _error(422, "illegal_phase", str(e))
    if isinstance(e, IterationCapReached):
        return _error(422, "iteration_cap_reached", str(e))
    if isinstance(e, SessionNotFound):
        return _error(404, "not_found", str(e))
    if isinstance(e, ThemekitError):
        return _error(500, type(e).__name__, str(e))
    raise e


class _Runner:
    """Tracks the in-flight stage per session; enforces one at a time."""

    def __init__(self):
        self._guard = threading.Lock()
        self._running: set[str] = set()
        self.last_error: dict[str, str] = {}

    def try_start(self, session_id: str) -> bool:
        with self._guard:
            if session_id in self._running:
                return False
            self._running.add(session_id)
            return True

    def finish(self, session_id: str, error: str | None) -> None:
        with self._guard:
            self._running.discard(session_id)
            if error is None:
                self.last_error.pop(session_id, None)
            else:
                self.last_error[session_id] = error

    def is_running(self, session_id: str) -> bool:
        with self._guard:
            return session_id in self._running


def _session_summary(orch: Orchestrator, runner: _Runner, sid: str) -> dict:
    state = orch.get_session(sid)
    return {
        "session_id": state.session_id,
        "phase": state.phase.value,
        "iteration": state.iteration,
        "current_theme_version": state.current_theme_version,
        "unattended_iterations": state.unattended_iterations,
        "last_advisory": state.last_advisory,
        "running": runner.is_running(sid),
        "last_error": runner.last_error.get(sid),
        "transcript_ids": list(state.transcript_ids),
        "history_length": len(state.history),
        "config": state.config.to_dict(),
    }


def create_app(orchestrator: Orchestrator, ui_dir: str | None = None,
               body_cap: int = DEFAULT_BODY_CAP,
               dev_cors: bool = False) -> FastAPI:
    app = FastAPI(title="themekit", version="0.1.0",
                  openapi_url="/api/openapi.json")
    runner = _Runner()
    app.state.orchestrator = orchestrator
    app.state.runner = runner

    if dev_cors:
        app.add_middleware(CORSMiddleware, allow_origins=["*"],
                           allow_methods=["*"], allow_headers=["*"])

    @app.middleware("http")
    async def cap_body(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and int(length) > body_cap:
            return _error(413, "payload_too_large",
                          f"request body exceeds {body_cap} bytes")
        return await call_next(request)

    @app.exception_handler(ThemekitError)
    async def handle_domain_error(request: Request, exc: ThemekitError):
        return _map_error(exc)

    # -- sessions ------------------------------------------------------------

    @app.get("/api/sessions")
    def list_sessions():
        return [_session_summary(orchestrator, runner, sid)
                for sid in orchestrator.store.list_sessions()]

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.json()
        try:
            config = StudyConfig.from_dict(body.get("config", {}))
            transcripts = [Transcript.from_dict(t)
                           for t in body.get("transcripts", [])]
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ValidationFailed):
                raise
            raise InvalidPayload(f"malformed body: {e}") from e
        state = orchestrator.create_session(config, transcripts,
                                            session_id=body.get("session_id"))
        return _session_summary(orchestrator, runner, state.session_id)

    @app.get("/api/sessions/{sid}")
    def get_session(sid: str):
        return _session_summary(orchestrator, runner, sid)

    @app.post("/api/sessions/{sid}/advance", status_code=202)
    def advance(sid: str):
        state = orchestrator.get_session(sid)
        if state.phase is Phase.FINALIZED:
            raise IllegalPhase("session is finalized")
        if state.phase in _CYCLE_PHASES and state.phase is not Phase.EVALUATED \
                and state.unattended_iterations \
                >= state.config.max_unattended_iterations:
            raise IterationCapReached("expert decision required before "
                                      "another cycle")
        if not runner.try_start(sid):
            return _error(409, "stage_in_flight",
                          "a stage is already running for this session")

        def work():
            err = None
            try:
                if state.phase in _GENERATION_PHASES:
                    orchestrator.run_generation(sid)
                else:
                    orchestrator.run_evaluation_cycle(sid)
            except Exception as e:  # surfaced via polling
                err = f"{type(e).__name__}: {e}"
            finally:
                runner.finish(sid, err)

        threading.Thread(target=work, daemon=True).start()
        return JSONResponse(status_code=202,
                            content={"session_id": sid, "accepted": True})

    @app.post("/api/sessions/{sid}/decision")
    async def decision(sid: str, request: Request):
        body = await request.json()
        try:
            dec = ExpertDecision.from_dict(body)
        except (KeyError, ValueError) as e:
            raise InvalidPayload(f"malformed decision: {e}") from e
        orchestrator.apply_expert_decision(sid, dec)
        return _session_summary(orchestrator, runner, sid)

    # -- metrics -------------------------------------------------------------

    @app.post("/api/sessions/{sid}/metrics")
    async def metrics(sid: str, request: Request):
        body = await request.json()
        ref_dict = body.get("reference") or {}
        if not ref_dict.get("themes"):
            raise InvalidPayload("reference theme set must be non-empty")
        reference = ThemeSet.from_dict(ref_dict)
        theta = float(body.get("theta", 0.60))
        basis = ComparisonBasis(body.get("basis", "first_sentence"))
        report = orchestrator.compute_metrics(sid, reference, theta, basis)
        return {"report": report, "heatmap": report["matrix"]}

    # -- artifacts -----------------------------------------------------------

    @app.get("/api/sessions/{sid}/themes/{version}")
    def get_themes(sid: str, version: int):
        return orchestrator.store.read_json(
            sid, f"artifacts/themes/v{version}.json")

    @app.get("/api/sessions/{sid}/codes")
    def get_codes(sid: str):
        return orchestrator.store.read_json(sid, "artifacts/codes.json")

    @app.get("/api/sessions/{sid}/feedback")
    def get_feedback(sid: str):
        state = orchestrator.get_session(sid)
        out = []
        for i in range(1, state.iteration + 2):
            rel = f"artifacts/feedback/iter{i:03d}.json"
            if orchestrator.store.has(sid, rel):
                out.append({"iteration": i,
                            "feedback": orchestrator.store.read_json(sid, rel)})
        return out

    @app.get("/api/sessions/{sid}/actions")
    def get_actions(sid: str):
        state = orchestrator.get_session(sid)
        out = []
        for i in range(1, state.iteration + 2):
            rel = f"artifacts/actions/iter{i:03d}.json"
            if orchestrator.store.has(sid, rel):
                out.append({"iteration": i,
                            "actions": orchestrator.store.read_json(sid, rel)})
        return out

    @app.get("/api/sessions/{sid}/audit")
    def get_audit(sid: str):
        path = orchestrator.store.audit_path(sid)
        if not orchestrator.store.exists(sid):
            raise SessionNotFound(f"session {sid!r} not found")
        content = path.read_text() if path.exists() else ""
        return Response(content=content, media_type="application/x-ndjson")

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
