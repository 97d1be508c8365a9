"""HTTP service: sessions, chat turns, transcripts, health.

Every response body carries ``schema_version``; error bodies carry a
machine-readable code under ``error.code``. Turns within one session are
serialized (queued by default, or rejected-busy per config); sessions are
independent and handled concurrently. Index snapshots are immutable and
shared read-only.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import kernels
from .config import ServerConfig, make_web_client
from .embedding import make_provider
from .errors import ConfigError, WellspringError
from .generation import ChatEngine, make_llm_provider
from .index import SNAPSHOT_VERSION, load_snapshot
from .memory import SessionMemory
from .runtime import SequentialIds, SystemClock, TickClock, UuidIds

SCHEMA_VERSION = 1


def _error_body(code: str, message: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "error": {"code": code, "message": message}}


class SessionStore:
    """Sessions persisted as append-only JSONL logs under data_dir/sessions.

    The first log record is a session header; the rest are turn/embedding
    records appended by SessionMemory. Deleting the data directory and
    replaying the same requests reproduces identical files.
    """

    def __init__(self, data_dir: Path, provider, clock, deterministic: bool):
        self.sessions_dir = data_dir / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.provider = provider
        self.clock = clock
        existing = sorted(self.sessions_dir.glob("*.jsonl"))
        self._ids = SequentialIds(start=len(existing) + 1) if deterministic else UuidIds()
        self._sessions: dict[str, SessionMemory] = {}
        self._created: dict[str, str] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _log_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def create(self) -> tuple[str, str]:
        with self._registry_lock:
            session_id = self._ids()
            created_at = self.clock()
            session = SessionMemory(
                session_id=session_id,
                provider=self.provider,
                clock=self.clock,
                log_path=self._log_path(session_id),
            )
            session._append_log({"record": "session", "session_id": session_id, "created_at": created_at})
            self._sessions[session_id] = session
            self._created[session_id] = created_at
            self._locks[session_id] = threading.Lock()
            return session_id, created_at

    def get(self, session_id: str) -> Optional[SessionMemory]:
        with self._registry_lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
            path = self._log_path(session_id)
            if not path.is_file():
                return None
            session = SessionMemory.load(session_id, path, self.provider, clock=self.clock)
            created_at = ""
            first_line = path.read_text(encoding="utf-8").splitlines()[:1]
            if first_line:
                record = json.loads(first_line[0])
                if record.get("record") == "session":
                    created_at = record.get("created_at", "")
            self._sessions[session_id] = session
            self._created[session_id] = created_at
            self._locks.setdefault(session_id, threading.Lock())
            return session

    def created_at(self, session_id: str) -> str:
        return self._created.get(session_id, "")

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())


def build_engine(config: ServerConfig) -> tuple[ChatEngine, SessionStore, dict]:
    """Load the snapshot, wire providers, and return (engine, store, info)."""
    kb = load_snapshot(config.snapshot)
    meta = kb.embedding_meta
    if meta.get("provider") != config.embedding.provider_kind or meta.get("dim") != config.embedding.dim:
        raise ConfigError(
            "embedding config does not match the snapshot: snapshot was built with "
            f"{meta.get('provider')}/dim={meta.get('dim')}, config says "
            f"{config.embedding.provider_kind}/dim={config.embedding.dim}"
        )
    clock = TickClock() if config.deterministic else SystemClock()
    embed_provider = make_provider(config.embedding)
    web_client = make_web_client(config.web, config.base_dir, clock)
    generation_llm = make_llm_provider(config.generation_llm, config.base_dir)
    safety_llm = make_llm_provider(config.safety_llm, config.base_dir)
    quarantine_path = (config.data_dir / "quarantine" / "blocked.jsonl") if config.quarantine else None
    engine = ChatEngine(
        kb=kb,
        embed_provider=embed_provider,
        web_client=web_client,
        generation_llm=generation_llm,
        safety_llm=safety_llm,
        fusion=config.fusion,
        token_budget=config.token_budget,
        recall_k=config.recall_k,
        clock=clock,
        quarantine_path=quarantine_path,
    )
    store = SessionStore(config.data_dir, embed_provider, clock, config.deterministic)
    info = {
        "index": {
            "format_version": SNAPSHOT_VERSION,
            "content_hash": kb.content_hash,
            "chunks": len(kb.chunks),
            "dim": kb.dim,
        },
        "providers": {
            "embedding": embed_provider.kind,
            "generation": generation_llm.kind,
            "safety": safety_llm.kind,
            "web": web_client.kind,
        },
        "kernel_backend": kernels.BACKEND,
    }
    return engine, store, info


def create_app(config: ServerConfig) -> FastAPI:
    engine, store, info = build_engine(config)
    app = FastAPI(title="wellspring", docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.state.store = store
    app.state.info = info
    app.state.config = config

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content=_error_body("validation_error", str(exc.errors())))

    @app.exception_handler(WellspringError)
    async def _domain_handler(request: Request, exc: WellspringError):
        return JSONResponse(status_code=500, content=_error_body("internal_error", str(exc)))

    @app.post("/sessions", status_code=201)
    def create_session():
        session_id, created_at = store.create()
        return {"schema_version": SCHEMA_VERSION, "session_id": session_id, "created_at": created_at}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, payload: dict):
        text = payload.get("text")
        if not isinstance(text, str) or not text.strip():
            return JSONResponse(
                status_code=400,
                content=_error_body("validation_error", "text must be a non-empty string"),
            )
        session = store.get(session_id)
        if session is None:
            return JSONResponse(
                status_code=404, content=_error_body("session_not_found", f"no session {session_id!r}")
            )
        lock = store.lock_for(session_id)
        if config.queue_policy == "reject-busy":
            if not lock.acquire(blocking=False):
                return JSONResponse(
                    status_code=409,
                    content=_error_body("session_busy", "another turn is in flight for this session"),
                )
        else:
            lock.acquire()
        try:
            response = engine.respond(session, text.strip())
        finally:
            lock.release()
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session_id,
            "turn_index": response.turn_index,
            "text": response.text,
            "evidence": [
                {"chunk_id": e.chunk_id, "uri": e.uri, "category": e.category} for e in response.evidence
            ],
            "memory_used": response.memory_used,
            "verdict": response.verdict.label,
            "fallback_used": response.fallback_used,
            "web_triggered": response.web_triggered,
            "warnings": response.warnings,
        }

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        session = store.get(session_id)
        if session is None:
            return JSONResponse(
                status_code=404, content=_error_body("session_not_found", f"no session {session_id!r}")
            )
        turns = []
        for turn in session.turns:
            meta = session.turn_meta.get(turn.turn_index, {})
            turns.append(
                {
                    "turn_index": turn.turn_index,
                    "query": turn.query,
                    "response": turn.response,
                    "timestamp": turn.timestamp,
                    **meta,
                }
            )
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session_id,
            "created_at": store.created_at(session_id),
            "turns": turns,
        }

    @app.get("/health")
    def health():
        return {"schema_version": SCHEMA_VERSION, "status": "ok", **info}

    if config.ui_static_dir and Path(config.ui_static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(config.ui_static_dir), html=True), name="ui")

    return app
