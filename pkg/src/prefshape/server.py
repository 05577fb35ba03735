"""HTTP service for human preference sessions.

One background thread per session runs the active loop; the pending query
is exposed through a blocking channel with at most one outstanding
response. The frontend polls GET /query and POSTs choices.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import session as session_mod
from .dynamics import ScenarioConfig
from .querygen import Query
from .session import SessionConfig, SessionStore


class HumanChannel:
    """Blocking bridge between the session loop and the HTTP handlers."""

    kind = "human"

    def __init__(self, timeout: float = None):
        self.cond = threading.Condition()
        self.pending: Query | None = None
        self.choice: str | None = None
        self.phase = "starting"
        self.answered = 0
        self.timeout = timeout

    def describe(self) -> dict:
        return {"kind": "human"}

    def respond(self, query: Query, rng) -> int:
        with self.cond:
            self.pending = query
            self.choice = None
            self.phase = "waiting_for_response"
            self.cond.notify_all()
            ok = self.cond.wait_for(lambda: self.choice is not None, timeout=self.timeout)
            if not ok:
                self.phase = "paused"
                raise TimeoutError("no response; session paused (resumable from log)")
            choice = self.choice
            self.pending = None
            self.choice = None
            self.answered += 1
            self.phase = "optimizing"
        return 1 if choice == "A" else -1

    def submit(self, query_id: str, choice: str):
        with self.cond:
            if self.pending is None or self.pending.query_id != query_id:
                raise KeyError("no matching pending query")
            if self.choice is not None:
                raise ValueError("response already submitted")
            if choice not in ("A", "B"):
                raise ValueError("choice must be 'A' or 'B'")
            self.choice = choice
            self.cond.notify_all()


class SessionRunner:
    def __init__(self, session_id: str, scenario: ScenarioConfig, cfg: SessionConfig,
                 root: Path):
        self.session_id = session_id
        self.cfg = cfg
        self.channel = HumanChannel()
        self.store = SessionStore(root, session_id)
        self.error: str | None = None
        self.done = False

        def run():
            try:
                session_mod.run_active_session(
                    self.channel, scenario, cfg, self.store,
                    on_progress=self._progress)
                self.done = True
                self.channel.phase = "complete"
            except Exception as e:  # surfaced via /state
                self.error = str(e)
                self.channel.phase = "error"

        self.thread = threading.Thread(target=run, daemon=True)
        self.thread.start()

    def _progress(self, index, phase):
        self.channel.answered = index
        self.channel.phase = phase


class CreateSession(BaseModel):
    n_queries: int = 100
    seed: int = 0
    session_id: str | None = None


class Response(BaseModel):
    query_id: str
    choice: str


def create_app(root: Path = None, scenario: ScenarioConfig = None,
               query_cfg=None) -> FastAPI:
    root = Path(root) if root is not None else session_mod.data_dir()
    scenario = scenario or ScenarioConfig()
    app = FastAPI(title="prefshape")
    runners: dict[str, SessionRunner] = {}

    @app.post("/sessions")
    def create_session(body: CreateSession):
        session_id = body.session_id or uuid.uuid4().hex[:12]
        if session_id in runners:
            raise HTTPException(409, "session already running")
        cfg = SessionConfig(n_queries=body.n_queries, seed=body.seed)
        if query_cfg is not None:
            cfg = SessionConfig(n_queries=body.n_queries, seed=body.seed,
                                querygen=query_cfg)
        runners[session_id] = SessionRunner(session_id, scenario, cfg, root)
        return {"session_id": session_id}

    def get_runner(session_id: str) -> SessionRunner:
        if session_id not in runners:
            raise HTTPException(404, "unknown session")
        return runners[session_id]

    @app.get("/sessions/{session_id}/query")
    def get_query(session_id: str):
        r = get_runner(session_id)
        with r.channel.cond:
            if r.channel.pending is not None:
                return r.channel.pending.to_json_dict()
        from fastapi.responses import JSONResponse
        return JSONResponse({"status": r.channel.phase}, status_code=202)

    @app.post("/sessions/{session_id}/response")
    def post_response(session_id: str, body: Response):
        r = get_runner(session_id)
        try:
            r.channel.submit(body.query_id, body.choice)
        except KeyError:
            raise HTTPException(409, "query is not current")
        except ValueError as e:
            raise HTTPException(409, str(e))
        return {"ok": True}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        r = get_runner(session_id)
        return {
            "answered": r.channel.answered,
            "total": r.cfg.n_queries,
            "phase": r.channel.phase,
            "error": r.error,
        }

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        r = get_runner(session_id)
        if not r.done:
            raise HTTPException(409, "session not complete")
        log = r.store.load()
        return {
            "session_id": session_id,
            "answered": log.n_answered,
            "responses": [resp for _, resp, _ in log.entries],
        }

    static_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if static_dir.is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
