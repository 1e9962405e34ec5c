"""HTTP facade over sessions.

Routes delegate to module operations one-to-one; all errors map to JSON
bodies carrying a machine-readable code. Mutating routes accept
``?mode=fallback`` to force the deterministic paths, which is what the
scripted demo and CI rely on.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .errors import StoryloomError, UnknownResource
from .gateway import GatewayConfig, LlmGateway
from .session import Session


class SessionStore:
    """In-memory registry with optional JSON persistence per session."""

    def __init__(self, data_dir: str | None = None):
        self.sessions: dict[str, Session] = {}
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)

    def create(self, gateway: LlmGateway | None = None) -> Session:
        session = Session(gateway=gateway)
        self.sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        if session_id not in self.sessions:
            raise UnknownResource(f"session {session_id}")
        return self.sessions[session_id]

    def drop(self, session_id: str) -> None:
        self.get(session_id)
        del self.sessions[session_id]

    def persist(self, session: Session) -> None:
        if not self.data_dir:
            return
        snap = session.snapshot()
        target = self.data_dir / f"{session.session_id}.json"
        fd, tmp = tempfile.mkstemp(dir=self.data_dir, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(snap, fh)
        os.replace(tmp, target)  # atomic snapshot write
        log_path = self.data_dir / f"{session.session_id}.events.jsonl"
        with open(log_path, "w", encoding="utf-8") as fh:
            for event in snap["event_log"]:
                fh.write(json.dumps(event) + "\n")


def create_app(store: SessionStore | None = None,
               gateway_config: GatewayConfig | None = None) -> FastAPI:
    app = FastAPI(title="storyloom", version="0.1.0")
    store = store or SessionStore(os.environ.get("STORYLOOM_DATA_DIR"))
    app.state.store = store
    app.state.gateway_config = gateway_config

    def new_gateway() -> LlmGateway:
        return LlmGateway(app.state.gateway_config or GatewayConfig.from_env())

    @app.exception_handler(StoryloomError)
    async def on_engine_error(request: Request, exc: StoryloomError):
        body = {"code": exc.code, "message": str(exc)}
        if hasattr(exc, "violations"):
            body["violations"] = [str(v) for v in exc.violations]
        return JSONResponse(status_code=exc.http_status, content=body)

    def payload_with_mode(payload: dict, mode: str | None) -> dict:
        payload = dict(payload or {})
        if mode:
            payload["mode"] = mode
        return payload

    # --- sessions -----------------------------------------------------------

    @app.post("/sessions")
    def create_session():
        session = store.create(gateway=new_gateway())
        return {"session_id": session.session_id}

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        store.drop(session_id)
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/datasets")
    def ingest_dataset(session_id: str, payload: dict = Body(...)):
        session = store.get(session_id)
        result = session.dispatch("ingest_dataset", payload)
        store.persist(session)
        return result

    # --- narrative ------------------------------------------------------------

    @app.post("/sessions/{session_id}/sentences")
    def append_sentence(session_id: str, payload: dict = Body(...),
                        mode: str | None = Query(default=None)):
        session = store.get(session_id)
        result = session.dispatch("append_sentence", payload_with_mode(payload, mode))
        store.persist(session)
        return result

    @app.post("/sessions/{session_id}/sentences/{sentence_id}/insert")
    def insert_sentence(session_id: str, sentence_id: str,
                        payload: dict = Body(...),
                        mode: str | None = Query(default=None)):
        session = store.get(session_id)
        body = payload_with_mode(payload, mode)
        body["anchor"] = sentence_id
        result = session.dispatch("insert_sentence", body)
        store.persist(session)
        return result

    @app.patch("/sessions/{session_id}/sentences/{sentence_id}")
    def update_sentence(session_id: str, sentence_id: str,
                        payload: dict = Body(...),
                        mode: str | None = Query(default=None)):
        session = store.get(session_id)
        body = payload_with_mode(payload, mode)
        body["sentence_id"] = sentence_id
        result = session.dispatch("update_sentence", body)
        store.persist(session)
        return result

    @app.delete("/sessions/{session_id}/sentences/{sentence_id}")
    def delete_sentence(session_id: str, sentence_id: str,
                        mode: str | None = Query(default=None)):
        session = store.get(session_id)
        result = session.dispatch("delete_sentence",
                                  payload_with_mode({"sentence_id": sentence_id}, mode))
        store.persist(session)
        return result

    @app.post("/sessions/{session_id}/sentences/{sentence_id}/branch")
    def create_branch(session_id: str, sentence_id: str):
        session = store.get(session_id)
        result = session.dispatch("create_branch", {"from_id": sentence_id})
        store.persist(session)
        return result

    @app.delete("/sessions/{session_id}/branches/{fork_child}")
    def delete_branch(session_id: str, fork_child: str,
                      mode: str | None = Query(default=None)):
        session = store.get(session_id)
        result = session.dispatch("delete_branch",
                                  payload_with_mode({"fork_child": fork_child}, mode))
        store.persist(session)
        return result

    # --- views / capture --------------------------------------------------------

    @app.post("/sessions/{session_id}/sentences/{sentence_id}/show_view")
    def show_view(session_id: str, sentence_id: str,
                  mode: str | None = Query(default=None)):
        session = store.get(session_id)
        result = session.dispatch("show_view",
                                  payload_with_mode({"sentence_id": sentence_id}, mode))
        store.persist(session)
        return result

    @app.post("/sessions/{session_id}/events")
    def record_event(session_id: str, payload: dict = Body(...)):
        session = store.get(session_id)
        result = session.dispatch("record_event", {"event": payload})
        store.persist(session)
        return result

    @app.post("/sessions/{session_id}/capture")
    def capture(session_id: str, mode: str | None = Query(default=None)):
        session = store.get(session_id)
        return session.capture(use_llm=mode != "fallback")

    @app.post("/sessions/{session_id}/capture/accept")
    def accept_capture(session_id: str, payload: dict = Body(...),
                       mode: str | None = Query(default=None)):
        session = store.get(session_id)
        result = session.dispatch(
            "accept_capture", payload_with_mode({"suggestion": payload}, mode))
        store.persist(session)
        return result

    # --- timeline / inquiry / story ------------------------------------------------

    @app.get("/sessions/{session_id}/timeline")
    def get_timeline(session_id: str):
        return store.get(session_id).timeline.export()

    @app.post("/sessions/{session_id}/timeline/{node_id}/restore")
    def restore(session_id: str, node_id: int):
        return store.get(session_id).timeline.restore(node_id)

    @app.get("/sessions/{session_id}/timeline/{node_id}/reflections")
    def reflections(session_id: str, node_id: int,
                    mode: str | None = Query(default=None)):
        session = store.get(session_id)
        return session.timeline.suggest_reflections(node_id,
                                                    use_llm=mode != "fallback")

    @app.get("/sessions/{session_id}/inquiry")
    def inquiry(session_id: str, status: str | None = Query(default=None)):
        return store.get(session_id).inquiry.board(status=status)

    @app.get("/sessions/{session_id}/story")
    def story(session_id: str):
        return store.get(session_id).compile_story().to_json()

    # --- persistence -------------------------------------------------------------

    @app.get("/sessions/{session_id}/snapshot")
    def get_snapshot(session_id: str):
        return store.get(session_id).snapshot()

    @app.put("/sessions/{session_id}/snapshot")
    def put_snapshot(session_id: str, payload: dict = Body(...)):
        session = Session.replay(payload["event_log"], session_id=session_id,
                                 gateway=new_gateway())
        store.sessions[session_id] = session
        store.persist(session)
        return {"session_id": session_id, "state_hash": session.state_hash()}

    return app


app = create_app()
