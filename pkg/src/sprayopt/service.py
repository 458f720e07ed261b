"""Minimal HTTP facade over the campaign module.

One campaign is one JSON document in the store directory. Mutations are
serialized per campaign id and guarded by optimistic concurrency: every
response carries the state revision, every mutation must echo the revision
it was computed against, and stale attempts get 409. GET and what-if calls
never change persisted state.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from . import campaign as camp
from .errors import SprayOptError
from .process import ControllableInputs


class CreateCampaignRequest(BaseModel):
    id: Optional[str] = None
    seed: int = 0
    initial_csv: str = Field(..., description="initial history CSV")
    config: Optional[dict] = None


class IgniteRequest(BaseModel):
    revision: int
    settings: Optional[list] = Field(
        None, description="six controllable values; defaults to a history row")
    settings_index: int = 0
    voltage: Union[float, list]


class RevisionRequest(BaseModel):
    revision: int


class IngestRequest(BaseModel):
    revision: int
    rows: list


class WhatIfRequest(BaseModel):
    rows: list


class _Store:
    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks = {}
        self._cache = {}
        self._registry_lock = threading.Lock()

    def lock(self, campaign_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(campaign_id, threading.Lock())

    def path(self, campaign_id: str) -> Path:
        return self.directory / f"{campaign_id}.json"

    def load(self, campaign_id: str) -> camp.CampaignState:
        if campaign_id in self._cache:
            return self._cache[campaign_id]
        p = self.path(campaign_id)
        if not p.exists():
            raise HTTPException(404, f"unknown campaign {campaign_id!r}")
        state = camp.load(p)
        self._cache[campaign_id] = state
        return state

    def save(self, state: camp.CampaignState) -> None:
        camp.save(state, self.path(state.id))
        self._cache[state.id] = state


def _state_view(state: camp.CampaignState) -> dict:
    doc = camp.state_to_dict(state)
    inc = state.incumbent()
    doc["incumbent"] = {
        "present": inc.present,
        "cost": inc.cost if inc.present else None,
        "history_index": inc.history_index,
    }
    return doc


def _check_revision(state: camp.CampaignState, revision: int) -> None:
    if revision != state.revision:
        raise HTTPException(
            409, f"stale revision {revision} (current {state.revision})")


def create_app(store_dir, config_path=None) -> FastAPI:
    from .cli import load_config

    app = FastAPI(title="sprayopt campaign service")
    store = _Store(Path(store_dir))
    base_cfg = load_config(config_path)

    @app.exception_handler(SprayOptError)
    def _spray_error(request: Request, exc: SprayOptError):
        from fastapi.responses import JSONResponse
        status = {"phase": 409, "validation": 422, "version": 409}.get(
            exc.category, 422)
        return JSONResponse(status_code=status,
                            content={"error": exc.category,
                                     "detail": str(exc)})

    @app.post("/campaigns")
    def create_campaign(req: CreateCampaignRequest):
        from .cli import _campaign_config

        campaign_id = req.id or uuid.uuid4().hex[:12]
        if store.path(campaign_id).exists():
            raise HTTPException(409, f"campaign {campaign_id!r} exists")
        cfg = dict(base_cfg)
        if req.config:
            for key, value in req.config.items():
                if isinstance(value, dict) and isinstance(cfg.get(key), dict):
                    merged = dict(cfg[key])
                    merged.update(value)
                    cfg[key] = merged
                else:
                    cfg[key] = value
        initial = camp.parse_history_csv(
            req.initial_csv,
            constraints=_campaign_config(cfg, req.seed).constraints,
            cost_cfg=_campaign_config(cfg, req.seed).cost)
        state = camp.new_campaign(campaign_id,
                                  _campaign_config(cfg, req.seed), initial)
        with store.lock(campaign_id):
            store.save(state)
        return {"id": campaign_id, "revision": state.revision,
                "phase": state.phase}

    @app.get("/campaigns/{campaign_id}")
    def get_state(campaign_id: str):
        return _state_view(store.load(campaign_id))

    @app.get("/campaigns/{campaign_id}/config")
    def get_config(campaign_id: str):
        state = store.load(campaign_id)
        return state.config.to_dict()

    @app.post("/campaigns/{campaign_id}/session")
    def ignite(campaign_id: str, req: IgniteRequest):
        with store.lock(campaign_id):
            state = store.load(campaign_id)
            _check_revision(state, req.revision)
            if req.settings is not None:
                x_c = ControllableInputs(*(float(v) for v in req.settings))
            else:
                if not 0 <= req.settings_index < len(state.history):
                    raise HTTPException(422, "settings_index out of range")
                x_c = state.history[req.settings_index].x.controllable
            state = camp.start_session(state, x_c, req.voltage)
            store.save(state)
            return {"delta_b": state.session.delta_b,
                    "session_id": state.session.session_id,
                    "revision": state.revision, "phase": state.phase}

    @app.post("/campaigns/{campaign_id}/batch")
    def propose(campaign_id: str, req: RevisionRequest):
        with store.lock(campaign_id):
            state = store.load(campaign_id)
            _check_revision(state, req.revision)
            if state.phase != camp.PHASE_READY:
                raise HTTPException(
                    409, f"cannot propose while {state.phase}")
            state = camp.propose(state)
            store.save(state)
            return {"batch_id": state.pending.batch_id,
                    "proposal": state.pending.proposal.to_dict(),
                    "revision": state.revision, "phase": state.phase}

    @app.post("/campaigns/{campaign_id}/batch/{index}/drop")
    def drop(campaign_id: str, index: int, req: RevisionRequest):
        with store.lock(campaign_id):
            state = store.load(campaign_id)
            _check_revision(state, req.revision)
            state = camp.drop_candidate(state, index)
            store.save(state)
            return {"dropped": sorted(state.pending.dropped),
                    "revision": state.revision, "phase": state.phase}

    @app.post("/campaigns/{campaign_id}/results")
    async def ingest(campaign_id: str, request: Request,
                     revision: Optional[int] = None):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("text/csv"):
            if revision is None:
                raise HTTPException(
                    422, "CSV ingestion requires ?revision=<n>")
            text = (await request.body()).decode("utf-8")
            rows = camp.parse_results_csv(text)
            expected = revision
        else:
            payload = await request.json()
            try:
                req = IngestRequest(**payload)
            except Exception as exc:
                raise HTTPException(422, f"invalid ingest body: {exc}")
            rows, expected = req.rows, req.revision
        with store.lock(campaign_id):
            state = store.load(campaign_id)
            _check_revision(state, expected)
            state, reports = camp.ingest_results(state, rows)
            store.save(state)
            return {"reports": [r.to_dict() for r in reports],
                    "revision": state.revision, "phase": state.phase}

    @app.post("/campaigns/{campaign_id}/finish")
    def finish(campaign_id: str, req: RevisionRequest):
        with store.lock(campaign_id):
            state = store.load(campaign_id)
            _check_revision(state, req.revision)
            state, inc = camp.finish(state)
            store.save(state)
            return {"incumbent_present": inc.present,
                    "incumbent_cost": inc.cost if inc.present else None,
                    "revision": state.revision, "phase": state.phase}

    @app.post("/campaigns/{campaign_id}/whatif")
    def what_if(campaign_id: str, req: WhatIfRequest):
        state = store.load(campaign_id)
        return camp.whatif(state, req.rows)

    return app
