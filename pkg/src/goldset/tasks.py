"""Labeling-task queue: the hand-off point between sampling and SMEs.

Each sampling batch becomes a directory of pending tasks. Tasks move
pending -> labeled (or skipped) exactly once; label submission is
idempotent via client-supplied keys, and task hand-out uses a lease with
timeout so an abandoned task returns to the queue. State files are written
atomically (write-temp-then-rename).
"""
from __future__ import annotations

import os
import json
import time
import uuid
from dataclasses import dataclass, field

from .model import PolicyVersion, GoldLabel, now_iso
from .sampler import SamplingBatch
from .errors import GoldsetError, NotFound, UnknownLabel

DEFAULT_LEASE_SECONDS = 600


class StateConflict(GoldsetError):
    code = "state_conflict"


@dataclass
class LabelTask:
    task_id: str
    item_id: str
    policy_id: str
    policy_version: int
    batch_id: str
    status: str = "pending"          # pending | labeled | skipped
    label: str | None = None
    sme_id: str | None = None
    idempotency_key: str | None = None
    lease_until: float = 0.0

    def to_dict(self):
        return {
            "task_id": self.task_id,
            "item_id": self.item_id,
            "policy_id": self.policy_id,
            "policy_version": self.policy_version,
            "batch_id": self.batch_id,
            "status": self.status,
            "label": self.label,
            "sme_id": self.sme_id,
            "idempotency_key": self.idempotency_key,
            "lease_until": self.lease_until,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class TaskQueue:
    """Directory-backed task state for one data root."""

    def __init__(self, root):
        self.root = str(root)
        os.makedirs(os.path.join(self.root, "batches"), exist_ok=True)

    def batch_dir(self, batch_id):
        return os.path.join(self.root, "batches", batch_id)

    def create_batch(self, batch: SamplingBatch, policy: PolicyVersion) -> list:
        """Materialize one pending task per selected item."""
        bdir = self.batch_dir(batch.batch_id)
        if os.path.isdir(bdir):
            raise StateConflict(f"batch {batch.batch_id} already exists")
        os.makedirs(bdir)
        with open(os.path.join(bdir, "batch.json"), "w") as fh:
            json.dump({**batch.to_dict(), "policy_id": policy.policy_id,
                       "policy_version": policy.version,
                       "created_at": now_iso()}, fh, indent=2)
        tasks = [
            LabelTask(
                task_id=f"{batch.batch_id}-{i:04d}",
                item_id=item_id,
                policy_id=policy.policy_id,
                policy_version=policy.version,
                batch_id=batch.batch_id,
            )
            for i, item_id in enumerate(batch.selected)
        ]
        self._save_tasks(batch.batch_id, tasks)
        return tasks

    def batch_info(self, batch_id) -> dict:
        path = os.path.join(self.batch_dir(batch_id), "batch.json")
        if not os.path.exists(path):
            raise NotFound(f"batch {batch_id} not found")
        with open(path) as fh:
            return json.load(fh)

    def list_tasks(self, batch_id) -> list:
        path = os.path.join(self.batch_dir(batch_id), "tasks.json")
        if not os.path.exists(path):
            raise NotFound(f"batch {batch_id} not found")
        with open(path) as fh:
            return [LabelTask.from_dict(d) for d in json.load(fh)]

    def _save_tasks(self, batch_id, tasks):
        path = os.path.join(self.batch_dir(batch_id), "tasks.json")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump([t.to_dict() for t in tasks], fh, indent=2)
        os.replace(tmp, path)

    def next_task(self, batch_id, lease_seconds=DEFAULT_LEASE_SECONDS):
        """Lease the next pending task, or None when the batch is exhausted."""
        tasks = self.list_tasks(batch_id)
        now = time.time()
        for task in tasks:
            if task.status == "pending" and task.lease_until <= now:
                task.lease_until = now + lease_seconds
                self._save_tasks(batch_id, tasks)
                return task
        return None

    def find_task(self, task_id):
        batch_id = task_id.rsplit("-", 1)[0]
        for task in self.list_tasks(batch_id):
            if task.task_id == task_id:
                return task
        raise NotFound(f"task {task_id} not found")

    def label_task(self, task_id, label, sme_id, idempotency_key=None,
                   policy: PolicyVersion | None = None) -> LabelTask:
        """Mark a task labeled. Repeating the same idempotency key is a no-op
        returning the first result; conflicting re-labels are rejected."""
        batch_id = task_id.rsplit("-", 1)[0]
        tasks = self.list_tasks(batch_id)
        for task in tasks:
            if task.task_id != task_id:
                continue
            if task.status == "labeled":
                if idempotency_key and task.idempotency_key == idempotency_key:
                    return task
                raise StateConflict(f"task {task_id} already labeled")
            if task.status == "skipped":
                raise StateConflict(f"task {task_id} was skipped")
            if policy is not None and label not in policy.label_set:
                raise UnknownLabel(f"label {label!r} not in {list(policy.label_set)}")
            task.status = "labeled"
            task.label = label
            task.sme_id = sme_id
            task.idempotency_key = idempotency_key or str(uuid.uuid4())
            self._save_tasks(batch_id, tasks)
            return task
        raise NotFound(f"task {task_id} not found")

    def skip_task(self, task_id) -> LabelTask:
        batch_id = task_id.rsplit("-", 1)[0]
        tasks = self.list_tasks(batch_id)
        for task in tasks:
            if task.task_id == task_id:
                if task.status != "pending":
                    raise StateConflict(f"task {task_id} is {task.status}")
                task.status = "skipped"
                self._save_tasks(batch_id, tasks)
                return task
        raise NotFound(f"task {task_id} not found")

    def import_labels(self, batch_id, rows, policy: PolicyVersion | None = None) -> int:
        """File-based labeling path: rows of {item_id, label, sme_id}."""
        tasks = self.list_tasks(batch_id)
        by_item = {t.item_id: t for t in tasks}
        filled = 0
        for row in rows:
            task = by_item.get(row["item_id"])
            if task is None:
                raise NotFound(f"item {row['item_id']!r} not in batch {batch_id}")
            if task.status != "pending":
                continue
            if policy is not None and row["label"] not in policy.label_set:
                raise UnknownLabel(f"label {row['label']!r} invalid for batch policy")
            task.status = "labeled"
            task.label = row["label"]
            task.sme_id = row.get("sme_id", "")
            task.idempotency_key = f"import:{batch_id}:{task.task_id}"
            filled += 1
        self._save_tasks(batch_id, tasks)
        return filled

    def pending_count(self, batch_id) -> int:
        return sum(t.status == "pending" for t in self.list_tasks(batch_id))

    def progress(self, batch_id) -> dict:
        tasks = self.list_tasks(batch_id)
        labeled = sum(t.status == "labeled" for t in tasks)
        return {"labeled": labeled, "total": len(tasks),
                "pending": sum(t.status == "pending" for t in tasks),
                "skipped": sum(t.status == "skipped" for t in tasks)}

    def gold_labels(self, batch_id) -> list:
        """GoldLabels for every labeled task in the batch."""
        return [
            GoldLabel(
                item_id=t.item_id,
                policy_id=t.policy_id,
                policy_version=t.policy_version,
                label=t.label,
                sme_id=t.sme_id or "",
                adjudicated=True,
            )
            for t in self.list_tasks(batch_id)
            if t.status == "labeled"
        ]
