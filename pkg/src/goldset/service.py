"""HTTP service exposing the labeling queue and publishing path.

This is the surface the SME console consumes. State lives in the same
data-directory layout the CLI uses, so any sequence of API calls is
byte-identical on disk to the equivalent CLI sequence. Writes are
serialized through one lock (single-writer contract).
"""
from __future__ import annotations

import os
import json
import threading

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .model import AgentDecision
from .store import GdsStore
from .tasks import TaskQueue, StateConflict
from .errors import (
    GoldsetError,
    NotFound,
    UnknownLabel,
    BadConfig,
    PolicyImmutable,
    PolicyMismatch,
    SamePolicyVersion,
    DifferentPolicyFamily,
    NonBinaryPolicy,
    EmptyOverlap,
)
from . import metrics, delta as delta_mod

_STATUS = {
    NotFound: 404,
    UnknownLabel: 400,
    BadConfig: 400,
    NonBinaryPolicy: 400,
    EmptyOverlap: 400,
    StateConflict: 409,
    PolicyImmutable: 409,
    PolicyMismatch: 409,
    SamePolicyVersion: 409,
    DifferentPolicyFamily: 409,
}


def _status_for(exc) -> int:
    for cls, status in _STATUS.items():
        if isinstance(exc, cls):
            return status
    return 422


class LabelBody(BaseModel):
    label: str
    sme_id: str = ""
    idempotency_key: str | None = None


class PublishBody(BaseModel):
    policy_id: str
    policy_version: int
    parent: str | None = None
    allow_partial: bool = False


def create_app(data_dir) -> FastAPI:
    app = FastAPI(title="goldset service")
    store = GdsStore(data_dir)
    queue = TaskQueue(data_dir)
    write_lock = threading.Lock()
    token = os.environ.get("GOLDSET_TOKEN")

    @app.exception_handler(GoldsetError)
    async def _goldset_error(request: Request, exc: GoldsetError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"code": exc.code, "message": str(exc)},
        )

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        if token and request.headers.get("authorization") != f"Bearer {token}":
            return JSONResponse(status_code=401,
                                content={"code": "unauthorized", "message": "bad token"})
        return await call_next(request)

    @app.get("/api/v1/batches/{batch_id}")
    def batch_status(batch_id: str):
        info = queue.batch_info(batch_id)
        return {"batch": info, "progress": queue.progress(batch_id)}

    @app.get("/api/v1/batches/{batch_id}/next-task")
    def next_task(batch_id: str):
        with write_lock:
            task = queue.next_task(batch_id)
        if task is None:
            return Response(status_code=204)
        return {"task": task.to_dict(), "progress": queue.progress(batch_id)}

    @app.post("/api/v1/tasks/{task_id}/label")
    def label_task(task_id: str, body: LabelBody):
        batch_id = task_id.rsplit("-", 1)[0]
        info = queue.batch_info(batch_id)
        policy = store.get_policy(info["policy_id"], info["policy_version"])
        with write_lock:
            task = queue.label_task(task_id, body.label, body.sme_id,
                                    idempotency_key=body.idempotency_key,
                                    policy=policy)
        return {"task": task.to_dict(), "progress": queue.progress(batch_id)}

    @app.post("/api/v1/batches/{batch_id}/publish")
    def publish_batch(batch_id: str, body: PublishBody):
        policy = store.get_policy(body.policy_id, body.policy_version)
        with write_lock:
            pending = queue.pending_count(batch_id)
            if pending and not body.allow_partial:
                raise StateConflict(f"{pending} tasks still pending in {batch_id}")
            gold = queue.gold_labels(batch_id)
            version = store.publish(gold, policy, parent_id=body.parent)
        return version.manifest()

    @app.get("/api/v1/versions/{version_id}/profile")
    def version_profile(version_id: str):
        version = store.get_version(version_id)
        pool = store.load_pool()
        items = [pool.items[i] for i in version.records if i in pool.items]
        result = metrics.profile_dataset(items)
        return {"version_id": version_id, "item_count": version.item_count,
                **result.to_dict()}

    @app.get("/api/v1/delta")
    def policy_delta(v1: str, v2: str):
        version1, version2 = store.get_version(v1), store.get_version(v2)
        old_policy = store.get_policy(version1.policy_id, version1.policy_version)
        new_policy = store.get_policy(version2.policy_id, version2.policy_version)
        matrix = delta_mod.policy_delta(version1, version2, old_policy, new_policy)
        return {**matrix.to_dict(), "sankey": delta_mod.sankey_export(matrix)}

    @app.get("/api/v1/agents/{agent_id}/report")
    def agent_report(agent_id: str, gds: str):
        path = os.path.join(data_dir, "decisions", f"{agent_id}.jsonl")
        if not os.path.exists(path):
            raise NotFound(f"no stored decisions for agent {agent_id!r}")
        with open(path) as fh:
            decisions = [AgentDecision.from_dict(json.loads(line))
                         for line in fh if line.strip()]
        version = store.get_version(gds)
        policy = store.get_policy(version.policy_id, version.policy_version)
        scoped = [d for d in decisions if d.item_id in version.records]
        result = metrics.confusion(scoped, version, policy)
        report = metrics.quality_report(result.counts)
        return {"agent_id": agent_id, "gds": gds,
                "report": report.to_dict(), "uncovered": result.uncovered}

    return app
