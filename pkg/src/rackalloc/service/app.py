"""HTTP+JSON API over placement sessions, with a server-sent event stream."""

from __future__ import annotations

import asyncio
import json

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from ..rackplacement import DataCenterTopology, DemandRequest, TopologyError, gen_simulated_topology
from .events import REJECTION_REASONS
from .session import ConflictError, SessionConfig, SessionStore, ValidationFailure


class RequestBody(BaseModel):
    id: str | None = None
    racks: int
    power: float
    cooling: float = 0.0
    reward: float = 200.0


class CreateSessionBody(BaseModel):
    topology: str | dict = "simulated"
    idempotency_key: str | None = None
    config: dict = Field(default_factory=dict)


class BatchBody(BaseModel):
    requests: list[RequestBody]


class DecisionBody(BaseModel):
    suggestion_id: str
    verdict: str  # accept | reject | manual
    reason: str | None = None
    reason_text: str | None = None
    placement: dict | None = None


def create_app(persist_dir=None, default_config: SessionConfig | None = None) -> FastAPI:
    app = FastAPI(title="placement sessions", version="1")
    store = SessionStore(persist_dir=persist_dir)
    app.state.store = store
    base_config = default_config or SessionConfig()

    def _session(sid: str):
        try:
            return store.get(sid)
        except KeyError:
            raise HTTPException(404, f"no session {sid}")

    @app.get("/reasons")
    def reasons() -> dict:
        return {"schema": "reasons/1", "reasons": list(REJECTION_REASONS)}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        if body.topology == "simulated":
            topo = gen_simulated_topology()
        elif isinstance(body.topology, dict):
            try:
                topo = DataCenterTopology.from_json(json.dumps(body.topology))
            except (TopologyError, KeyError, ValueError) as exc:
                raise HTTPException(422, f"invalid topology: {exc}")
        else:
            raise HTTPException(422, f"unknown topology {body.topology!r}")
        cfg_kwargs = dict(body.config)
        if "demand" in cfg_kwargs:
            from ..rackplacement import DemandConfig

            cfg_kwargs["demand"] = DemandConfig.from_json(json.dumps(cfg_kwargs["demand"]))
        try:
            cfg = SessionConfig(
                **{
                    **{
                        k: getattr(base_config, k)
                        for k in (
                            "sample_paths",
                            "time_limit",
                            "relative_gap",
                            "max_horizon",
                            "default_horizon",
                            "secondary",
                            "demand",
                            "sampling_seed",
                            "test_mode",
                        )
                    },
                    **cfg_kwargs,
                }
            )
        except TypeError as exc:
            raise HTTPException(422, f"invalid config: {exc}")
        session = store.create(topo, cfg, idempotency_key=body.idempotency_key)
        return {"schema": "session/1", "id": session.id, "status": session.status}

    @app.post("/sessions/{sid}/batches", status_code=201)
    def submit_batch(sid: str, body: BatchBody) -> dict:
        session = _session(sid)
        requests = []
        for i, r in enumerate(body.requests):
            rid = r.id or f"req-{session.version}-{i}"
            try:
                requests.append(DemandRequest(rid, r.racks, r.power, r.cooling, r.reward))
            except ValueError as exc:
                raise HTTPException(422, str(exc))
        try:
            suggestions = session.submit_batch(requests)
        except ValidationFailure as exc:
            raise HTTPException(422, str(exc))
        except ConflictError as exc:
            raise HTTPException(409, str(exc))
        return {
            "schema": "suggestions/1",
            "session": sid,
            "suggestions": [session.suggestion_payload(s) for s in suggestions],
        }

    @app.get("/sessions/{sid}/suggestions")
    def suggestions(sid: str) -> dict:
        session = _session(sid)
        return {
            "schema": "suggestions/1",
            "session": sid,
            "suggestions": [
                session.suggestion_payload(s)
                for s in sorted(session.suggestions.values(), key=lambda x: x.id)
            ],
        }

    @app.post("/sessions/{sid}/decisions")
    def decide(sid: str, body: DecisionBody) -> dict:
        session = _session(sid)
        try:
            snapshot = session.decide(
                body.suggestion_id,
                body.verdict,
                reason=body.reason,
                reason_text=body.reason_text,
                placement=body.placement,
            )
        except ConflictError as exc:
            raise HTTPException(409, str(exc))
        except ValidationFailure as exc:
            raise HTTPException(422, str(exc))
        return {"schema": "decision/1", "state": snapshot}

    @app.get("/sessions/{sid}/state")
    def state(sid: str) -> dict:
        return _session(sid).state_snapshot()

    @app.get("/sessions/{sid}/metrics")
    def metrics(sid: str) -> dict:
        return _session(sid).metrics()

    @app.get("/sessions/{sid}/events")
    async def events(sid: str, request: Request, from_seq: int = 0, follow: bool = False):
        session = _session(sid)

        async def stream():
            seq = from_seq
            while True:
                while seq < len(session.log):
                    ev = session.log.events[seq]
                    yield f"id: {ev.seq}\ndata: {ev.to_json()}\n\n"
                    seq += 1
                if not follow or session.status != "open":
                    break
                if await request.is_disconnected():
                    break
                await asyncio.sleep(0.05)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
