import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from goldset.model import ContentItem, PolicyVersion, GoldLabel, canonical_json
from goldset.store import GdsStore
from goldset.sampler import uniform_batch
from goldset.tasks import TaskQueue
from goldset.service import create_app

POLICY = PolicyVersion(policy_id="adult", version=1)


def seed_store(tmp_path, n_items=20):
    store = GdsStore(str(tmp_path))
    store.register_policy(POLICY)
    rng = np.random.default_rng(0)
    items = [ContentItem(item_id=f"i{k:03d}", embedding=tuple(rng.normal(size=4)),
                         code=k % 8) for k in range(n_items)]
    store.ingest(items)
    return store


def make_batch(tmp_path, store, k=5, seed=0):
    pool = store.load_pool()
    batch = uniform_batch(pool, set(), k, seed=seed)
    TaskQueue(str(tmp_path)).create_batch(batch, POLICY)
    return batch


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.delenv("GOLDSET_TOKEN", raising=False)
    store = seed_store(tmp_path)
    app = create_app(str(tmp_path))
    return TestClient(app), store, tmp_path


class TestLabelingFlow:
    def test_full_five_item_loop(self, client):
        api, store, tmp = client
        batch = make_batch(tmp, store, k=5)

        # seed version so the publish below demonstrates +5 growth
        seed_gold = [GoldLabel(item_id=f"i{k:03d}", policy_id="adult",
                               policy_version=1, label="negative")
                     for k in range(15, 18) if f"i{k:03d}" not in batch.selected]
        parent = store.publish(seed_gold, POLICY)

        labeled = 0
        while True:
            r = api.get(f"/api/v1/batches/{batch.batch_id}/next-task")
            if r.status_code == 204:
                break
            task = r.json()["task"]
            r2 = api.post(f"/api/v1/tasks/{task['task_id']}/label",
                          json={"label": "positive", "sme_id": "sme-1",
                                "idempotency_key": f"k-{task['task_id']}"})
            assert r2.status_code == 200
            labeled += 1
        assert labeled == 5

        r = api.post(f"/api/v1/batches/{batch.batch_id}/publish",
                     json={"policy_id": "adult", "policy_version": 1,
                           "parent": parent.version_id})
        assert r.status_code == 200
        manifest = r.json()
        assert manifest["item_count"] == parent.item_count + 5

        r = api.get(f"/api/v1/versions/{manifest['version_id']}/profile")
        assert r.status_code == 200
        assert r.json()["item_count"] == parent.item_count + 5

    def test_label_idempotent_replay(self, client):
        api, store, tmp = client
        batch = make_batch(tmp, store, k=2)
        task = api.get(f"/api/v1/batches/{batch.batch_id}/next-task").json()["task"]
        body = {"label": "positive", "sme_id": "s", "idempotency_key": "once"}
        first = api.post(f"/api/v1/tasks/{task['task_id']}/label", json=body)
        replay = api.post(f"/api/v1/tasks/{task['task_id']}/label", json=body)
        assert first.status_code == replay.status_code == 200
        assert first.json()["task"] == replay.json()["task"]
        progress = api.get(f"/api/v1/batches/{batch.batch_id}").json()["progress"]
        assert progress["labeled"] == 1

    def test_conflicting_relabel_409(self, client):
        api, store, tmp = client
        batch = make_batch(tmp, store, k=1)
        task = api.get(f"/api/v1/batches/{batch.batch_id}/next-task").json()["task"]
        api.post(f"/api/v1/tasks/{task['task_id']}/label",
                 json={"label": "positive", "idempotency_key": "a"})
        r = api.post(f"/api/v1/tasks/{task['task_id']}/label",
                     json={"label": "negative", "idempotency_key": "b"})
        assert r.status_code == 409
        assert r.json()["code"] == "state_conflict"

    def test_invalid_label_400(self, client):
        api, store, tmp = client
        batch = make_batch(tmp, store, k=1)
        task = api.get(f"/api/v1/batches/{batch.batch_id}/next-task").json()["task"]
        r = api.post(f"/api/v1/tasks/{task['task_id']}/label",
                     json={"label": "spam"})
        assert r.status_code == 400
        assert r.json()["code"] == "unknown_label"

    def test_publish_with_pending_409(self, client):
        api, store, tmp = client
        batch = make_batch(tmp, store, k=3)
        task = api.get(f"/api/v1/batches/{batch.batch_id}/next-task").json()["task"]
        api.post(f"/api/v1/tasks/{task['task_id']}/label", json={"label": "positive"})
        r = api.post(f"/api/v1/batches/{batch.batch_id}/publish",
                     json={"policy_id": "adult", "policy_version": 1})
        assert r.status_code == 409

        r = api.post(f"/api/v1/batches/{batch.batch_id}/publish",
                     json={"policy_id": "adult", "policy_version": 1,
                           "allow_partial": True})
        assert r.status_code == 200
        assert r.json()["item_count"] == 1

    def test_unknown_batch_404(self, client):
        api, _, _ = client
        r = api.get("/api/v1/batches/nope/next-task")
        assert r.status_code == 404
        assert r.json()["code"] == "not_found"


class TestReadEndpoints:
    def test_delta_endpoint(self, client):
        api, store, tmp = client
        p2 = PolicyVersion(policy_id="adult", version=2)
        store.register_policy(p2)

        def gold(policy, mapping):
            return [GoldLabel(item_id=i, policy_id=policy.policy_id,
                              policy_version=policy.version, label=lbl)
                    for i, lbl in mapping.items()]

        v1 = store.publish(gold(POLICY, {"i000": "positive", "i001": "negative"}),
                           POLICY)
        v2 = store.publish(gold(p2, {"i000": "negative", "i001": "negative"}), p2)
        r = api.get("/api/v1/delta", params={"v1": v1.version_id,
                                             "v2": v2.version_id})
        assert r.status_code == 200
        doc = r.json()
        assert doc["matched"] == 2
        assert sum(l["value"] for l in doc["sankey"]["links"]) == 2

    def test_agent_report_endpoint(self, client):
        api, store, tmp = client
        gold = [GoldLabel(item_id=f"i{k:03d}", policy_id="adult",
                          policy_version=1,
                          label="positive" if k % 2 else "negative")
                for k in range(10)]
        version = store.publish(gold, POLICY)
        decisions_dir = tmp / "decisions"
        decisions_dir.mkdir()
        with open(decisions_dir / "a1.jsonl", "w") as fh:
            for g in gold:
                fh.write(canonical_json({
                    "agent_id": "a1", "run_id": "r0", "item_id": g.item_id,
                    "policy_id": "adult", "policy_version": 1,
                    "label": g.label}) + "\n")
        r = api.get("/api/v1/agents/a1/report",
                    params={"gds": version.version_id})
        assert r.status_code == 200
        assert r.json()["report"]["accuracy"] == 1.0

    def test_agent_report_missing_404(self, client):
        api, store, tmp = client
        gold = [GoldLabel(item_id="i000", policy_id="adult",
                          policy_version=1, label="positive")]
        version = store.publish(gold, POLICY)
        r = api.get("/api/v1/agents/ghost/report",
                    params={"gds": version.version_id})
        assert r.status_code == 404


class TestAuth:
    def test_token_required_when_configured(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GOLDSET_TOKEN", "sekrit")
        store = seed_store(tmp_path)
        api = TestClient(create_app(str(tmp_path)))
        batch = make_batch(tmp_path, store, k=1)
        r = api.get(f"/api/v1/batches/{batch.batch_id}")
        assert r.status_code == 401
        r = api.get(f"/api/v1/batches/{batch.batch_id}",
                    headers={"Authorization": "Bearer sekrit"})
        assert r.status_code == 200


def test_api_state_matches_cli_layout(client):
    """Same sequence via API leaves the same on-disk task state the queue
    library (and hence the CLI) produces."""
    api, store, tmp = client
    batch = make_batch(tmp, store, k=2)
    task = api.get(f"/api/v1/batches/{batch.batch_id}/next-task").json()["task"]
    api.post(f"/api/v1/tasks/{task['task_id']}/label",
             json={"label": "positive", "sme_id": "s", "idempotency_key": "x"})
    queue = TaskQueue(str(tmp))
    stored = {t.task_id: t for t in queue.list_tasks(batch.batch_id)}
    assert stored[task["task_id"]].status == "labeled"
    assert stored[task["task_id"]].label == "positive"
