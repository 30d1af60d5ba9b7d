"""HTTP ask-tell facade over the run driver.

One optimization session per resource; a client creates a session from a
design-space spec plus run settings, then alternates GET ask / POST tell
until the budget is exhausted, and finally fetches the results.  Sessions
persist as append-only JSONL event logs under the data directory and are
replayed on startup, so a restarted server continues mid-session.

Endpoints:
    POST /v1/sessions                   create a session
    GET  /v1/sessions/{id}              status (includes the history)
    GET  /v1/sessions/{id}/ask          next point to evaluate
    POST /v1/sessions/{id}/tell         report an evaluation
    GET  /v1/sessions/{id}/results      database front, predicted front, proximity

Configuration via environment: MIXMOBO_PORT, MIXMOBO_DATA_DIR.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import driver
from .acquisition import AcquisitionConfig
from .design_space import DesignSpace, SpaceError
from .driver import RunConfig, RunState
from .surrogate import KernelConfig

DEFAULT_PORT = 8321


class ActiveWhenBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    var: str
    equals: str | None = None
    in_: list[str] | None = Field(default=None, alias="in")


class VariableBody(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    name: str
    kind: str
    bounds: list[float] | None = None
    levels: list[str] | None = None
    active_when: ActiveWhenBody | None = None


class SpaceBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str = "space"
    variables: list[VariableBody]


class RunBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n_objectives: int = Field(ge=1)
    n_constraints: int = Field(ge=0)
    doe_size: int = Field(ge=2)
    budget: int = Field(ge=2)
    acq: Literal["ehvi", "pi", "mpi"] = "ehvi"
    reg: Literal["none", "max", "sum"] = "none"
    gamma: float = 1.0
    kernel: Literal["squared_exponential", "matern52"] = "squared_exponential"
    pls_components: int = 0
    seed: int = 0
    infill_starts: int = 20


class CreateSessionBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    version: int = 1
    name: str = "session"
    space: SpaceBody
    run: RunBody


class TellBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    version: int = 1
    token: str
    f: list[float]
    g: list[float] = []
    status: Literal["ok", "failed"] = "ok"


def _build_config(body: CreateSessionBody) -> RunConfig:
    space_dict = {
        "name": body.space.name,
        "variables": [v.model_dump(by_alias=True, exclude_none=True) for v in body.space.variables],
    }
    space = DesignSpace.from_dict(space_dict)
    return RunConfig(
        space=space,
        n_objectives=body.run.n_objectives,
        n_constraints=body.run.n_constraints,
        doe_size=body.run.doe_size,
        budget=body.run.budget,
        acquisition=AcquisitionConfig(
            criterion=body.run.acq, reg=body.run.reg, gamma=body.run.gamma
        ),
        kernel=KernelConfig(
            family=body.run.kernel, n_pls_components=body.run.pls_components
        ),
        seed=body.run.seed,
        infill_starts=body.run.infill_starts,
        name=body.name,
    )


@dataclass
class Session:
    session_id: str
    config: RunConfig
    state: RunState
    log_path: Path
    token: str | None = None
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)
    results_cache: dict = field(default_factory=dict)

    def append_event(self, event: dict) -> None:
        event["t"] = time.time()
        with open(self.log_path, "a") as fh:
            fh.write(json.dumps(event) + "\n")
        self.updated_at = time.time()

    def history_body(self) -> list[dict]:
        space = self.config.space
        return [
            {
                "values": space.named_values(r.point),
                "f": list(r.objectives),
                "g": list(r.constraints),
                "origin": r.origin,
                "status": r.status,
                "feasible": r.feasible,
            }
            for r in self.state.history
        ]


def _entry_body(space, point, f, g) -> dict:
    return {"values": space.named_values(point), "f": list(f), "g": list(g)}


def _load_session(path: Path) -> Session | None:
    with open(path) as fh:
        events = [json.loads(line) for line in fh if line.strip()]
    if not events or events[0].get("type") != "created":
        return None
    created = events[0]
    config = RunConfig.from_dict(created["config"])
    records = []
    pending = None
    token = None
    for event in events[1:]:
        if event["type"] == "ask":
            pending = (config.space.point_from_named(event["point"]), event["origin"])
            token = event["token"]
        elif event["type"] == "tell":
            point, origin = pending
            records.append((point, event["f"], event["g"], origin, event["status"]))
            pending, token = None, None
    state = RunState.restore(config, records, pending=pending)
    return Session(
        session_id=created["session_id"],
        config=config,
        state=state,
        log_path=path,
        token=token,
        created_at=created.get("t", time.time()),
    )


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("MIXMOBO_DATA_DIR", "./mixmobo-sessions"))
    data_dir.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="mixmobo ask-tell service", version="1")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    for path in sorted(data_dir.glob("*.jsonl")):
        session = _load_session(path)
        if session is not None:
            sessions[session.session_id] = session

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        # session creation promises field-level 400s; elsewhere keep 422
        status = 400 if request.url.path.rstrip("/").endswith("/sessions") else 422
        errors = [
            {"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=status, content={"errors": errors})

    def get_session(session_id: str) -> Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            config = _build_config(body)
        except (SpaceError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        session_id = uuid.uuid4().hex[:12]
        session = Session(
            session_id=session_id,
            config=config,
            state=RunState(config),
            log_path=data_dir / f"{session_id}.jsonl",
        )
        session.append_event(
            {"type": "created", "session_id": session_id, "config": config.to_dict()}
        )
        with registry_lock:
            sessions[session_id] = session
        return {
            "session_id": session_id,
            "relaxed_dimension": config.space.relaxed_dimension(),
            "phase": session.state.phase,
        }

    @app.get("/v1/sessions/{session_id}")
    def session_status(session_id: str):
        session = get_session(session_id)
        with session.lock:
            state = session.state
            return {
                "session_id": session_id,
                "name": session.config.name,
                "phase": state.phase,
                "n_evaluated": state.n_evaluated,
                "budget": session.config.budget,
                "doe_size": session.config.doe_size,
                "pending": session.token is not None,
                "created_at": session.created_at,
                "updated_at": session.updated_at,
                "history": session.history_body(),
            }

    @app.get("/v1/sessions/{session_id}/ask")
    def ask_endpoint(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.state.pending is not None:
                raise HTTPException(status_code=409, detail="pending evaluation: tell it first")
            if session.state.phase == driver.DONE:
                raise HTTPException(
                    status_code=410,
                    detail={
                        "message": "budget exhausted",
                        "results": f"/v1/sessions/{session_id}/results",
                        "status": f"/v1/sessions/{session_id}",
                    },
                )
            point = driver.ask(session.state)
            _, origin = session.state.pending
            session.token = f"ask-{session.state.n_evaluated}-{uuid.uuid4().hex[:8]}"
            session.append_event(
                {
                    "type": "ask",
                    "token": session.token,
                    "point": session.config.space.named_values(point),
                    "origin": origin,
                }
            )
            return {
                "token": session.token,
                "values": session.config.space.named_values(point),
                "origin": origin,
                "phase": session.state.phase,
            }

    @app.post("/v1/sessions/{session_id}/tell")
    def tell_endpoint(session_id: str, body: TellBody):
        session = get_session(session_id)
        with session.lock:
            if session.token is None:
                raise HTTPException(status_code=409, detail="no pending evaluation")
            if body.token != session.token:
                raise HTTPException(status_code=409, detail="token does not match the pending ask")
            config = session.config
            if len(body.f) != config.n_objectives:
                raise HTTPException(
                    status_code=422,
                    detail=f"expected {config.n_objectives} objective values, got {len(body.f)}",
                )
            if len(body.g) != config.n_constraints:
                raise HTTPException(
                    status_code=422,
                    detail=f"expected {config.n_constraints} constraint values, got {len(body.g)}",
                )
            point, _ = session.state.pending
            driver.tell(session.state, point, body.f, body.g, status=body.status)
            session.append_event(
                {"type": "tell", "token": body.token, "f": body.f, "g": body.g, "status": body.status}
            )
            session.token = None
            return {"phase": session.state.phase, "n_evaluated": session.state.n_evaluated}

    @app.get("/v1/sessions/{session_id}/results")
    def results_endpoint(session_id: str, force: bool = False):
        session = get_session(session_id)
        with session.lock:
            state = session.state
            if state.phase != driver.DONE and not force:
                raise HTTPException(
                    status_code=409,
                    detail="session not finished; pass ?force=true for interim results",
                )
            cache_key = state.n_evaluated
            if cache_key not in session.results_cache:
                result = driver.finalize(state)
                space = session.config.space
                session.results_cache.clear()
                session.results_cache[cache_key] = {
                    "phase": state.phase,
                    "n_evaluated": state.n_evaluated,
                    "pf_database": [
                        dict(
                            _entry_body(
                                space,
                                state.history[i].point,
                                state.history[i].objectives,
                                state.history[i].constraints,
                            ),
                            history_index=i,
                        )
                        for i in result.pf_database
                    ],
                    "predicted_pf": [
                        _entry_body(space, e.point, e.objectives, e.constraints)
                        for e in result.predicted_pf.entries
                    ],
                    "proximity": {
                        "distances": result.proximity.distances,
                        "nearest_database_index": result.proximity.nearest_database_index,
                        "database_total": result.proximity.database_total,
                        "database_on_merged": result.proximity.database_on_merged,
                        "predicted_total": result.proximity.predicted_total,
                        "predicted_on_merged": result.proximity.predicted_on_merged,
                        "summary": result.proximity.summary,
                    },
                }
            return session.results_cache[cache_key]

    return app


def serve(port: int | None = None, data_dir: str | Path | None = None) -> None:
    """Blocking uvicorn server; port/data dir fall back to the environment."""
    import uvicorn

    port = port if port is not None else int(os.environ.get("MIXMOBO_PORT", DEFAULT_PORT))
    uvicorn.run(create_app(data_dir), host="0.0.0.0", port=port, log_level="info")
