"""Content pool and immutable, digest-addressed golden-set version storage.

Layout under a data root::

    pool.jsonl                      one ContentItem per line (append-only)
    policies.json                   registry of PolicyVersion objects
    versions/<version_id>/
        manifest.json               version metadata + digests
        records.jsonl               one GoldLabel per line, sorted by item_id

A version id is the SHA-256 of the canonical serialization of
(parent_id, policy, records sorted by item_id), so publishing identical
inputs always yields the identical id and any on-disk tampering is
detectable on read.
"""
from __future__ import annotations

import os
import json
import hashlib
from dataclasses import dataclass, field

from .model import (
    ContentItem,
    PolicyVersion,
    GoldLabel,
    canonical_json,
    now_iso,
)
from .errors import (
    MalformedItem,
    UnknownItem,
    UnknownLabel,
    EmptyPublish,
    NotFound,
    CorruptVersion,
    NotAncestor,
    PolicyMismatch,
    PolicyImmutable,
)


@dataclass
class IngestReport:
    added: int = 0
    duplicates: int = 0
    pool_size: int = 0

    def to_dict(self):
        return {"added": self.added, "duplicates": self.duplicates, "pool_size": self.pool_size}


class ContentPool:
    """In-memory candidate pool keyed by item_id, with provenance counts."""

    def __init__(self, items=(), embedding_dim=None):
        self.items: dict[str, ContentItem] = {}
        self.source_counts: dict[str, int] = {}
        self.embedding_dim = embedding_dim
        if items:
            self.ingest(items)

    def __len__(self):
        return len(self.items)

    def __contains__(self, item_id):
        return item_id in self.items

    def ingest(self, items) -> IngestReport:
        """Add novel items; duplicates (same item_id) are skipped and counted."""
        report = IngestReport()
        for item in items:
            item.validate(self.embedding_dim)
            if self.embedding_dim is None:
                self.embedding_dim = len(item.embedding)
            if item.item_id in self.items:
                report.duplicates += 1
                continue
            self.items[item.item_id] = item
            self.source_counts[item.source] = self.source_counts.get(item.source, 0) + 1
            report.added += 1
        report.pool_size = len(self.items)
        return report


def ingest_candidates(pool: ContentPool, items) -> IngestReport:
    return pool.ingest(items)


def compute_version_id(parent_id, policy_ref, records: dict) -> str:
    """Pure content digest over (parent_id, policy, sorted records)."""
    payload = {
        "parent_id": parent_id,
        "policy_id": policy_ref[0],
        "policy_version": policy_ref[1],
        "records": [records[k].to_dict() for k in sorted(records)],
    }
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GdsVersion:
    """An immutable published golden-set version with parent lineage."""

    version_id: str
    parent_id: str | None
    policy_id: str
    policy_version: int
    records: dict = field(default_factory=dict)  # item_id -> GoldLabel
    created_at: str = field(default_factory=now_iso)

    @property
    def item_count(self) -> int:
        return len(self.records)

    @property
    def policy_ref(self) -> tuple:
        return (self.policy_id, self.policy_version)

    def manifest(self) -> dict:
        return {
            "version_id": self.version_id,
            "parent_id": self.parent_id,
            "policy_id": self.policy_id,
            "policy_version": self.policy_version,
            "item_count": self.item_count,
            "created_at": self.created_at,
            "records_digest": self.records_digest(),
        }

    def records_lines(self) -> str:
        return "".join(
            canonical_json(self.records[k].to_dict()) + "\n" for k in sorted(self.records)
        )

    def records_digest(self) -> str:
        return hashlib.sha256(self.records_lines().encode("utf-8")).hexdigest()


def build_version(pool: ContentPool, parent, labels, policy: PolicyVersion) -> GdsVersion:
    """Assemble a new version: parent records overridden/extended by ``labels``.

    Pure except for the created_at stamp, which is excluded from the digest.
    """
    if not labels and parent is None:
        raise EmptyPublish("no labels and no parent")
    if parent is not None and parent.policy_id != policy.policy_id:
        raise PolicyMismatch(
            f"parent policy {parent.policy_id} != publish policy {policy.policy_id}"
        )
    records = dict(parent.records) if parent is not None else {}
    for label in labels:
        label.validate(policy)
        if label.item_id not in pool:
            raise UnknownItem(f"label for {label.item_id!r} not in content pool")
        records[label.item_id] = label
    parent_id = parent.version_id if parent is not None else None
    version_id = compute_version_id(parent_id, policy.ref, records)
    return GdsVersion(
        version_id=version_id,
        parent_id=parent_id,
        policy_id=policy.policy_id,
        policy_version=policy.version,
        records=records,
    )


def new_items(child: GdsVersion, parent: GdsVersion, resolver=None) -> set:
    """Item ids present in ``child`` but not in ``parent``.

    ``resolver`` maps version_id -> GdsVersion and is used to walk the
    parent chain; without it only direct parentage can be verified.
    """
    if not _is_ancestor(child, parent, resolver):
        raise NotAncestor(f"{parent.version_id} is not an ancestor of {child.version_id}")
    return set(child.records) - set(parent.records)


def _is_ancestor(child: GdsVersion, parent: GdsVersion, resolver) -> bool:
    if child.version_id == parent.version_id:
        return True
    cur = child
    seen = set()
    while cur.parent_id is not None and cur.parent_id not in seen:
        if cur.parent_id == parent.version_id:
            return True
        seen.add(cur.parent_id)
        if resolver is None:
            return False
        try:
            cur = resolver(cur.parent_id)
        except NotFound:
            return False
    return False


class GdsStore:
    """Directory-backed pool + version store. Single writer, many readers."""

    def __init__(self, root):
        self.root = str(root)
        os.makedirs(os.path.join(self.root, "versions"), exist_ok=True)
        self._pool = None

    # -- pool ----------------------------------------------------------------

    @property
    def pool_path(self):
        return os.path.join(self.root, "pool.jsonl")

    def load_pool(self) -> ContentPool:
        if self._pool is None:
            pool = ContentPool()
            if os.path.exists(self.pool_path):
                with open(self.pool_path) as fh:
                    pool.ingest(ContentItem.from_dict(json.loads(line)) for line in fh if line.strip())
            self._pool = pool
        return self._pool

    def ingest(self, items) -> IngestReport:
        pool = self.load_pool()
        before = set(pool.items)
        report = pool.ingest(items)
        novel = [pool.items[i] for i in sorted(set(pool.items) - before)]
        with open(self.pool_path, "a") as fh:
            for item in novel:
                fh.write(canonical_json(item.to_dict()) + "\n")
        return report

    # -- policies ------------------------------------------------------------

    @property
    def policies_path(self):
        return os.path.join(self.root, "policies.json")

    def _load_policies(self) -> dict:
        if os.path.exists(self.policies_path):
            with open(self.policies_path) as fh:
                return json.load(fh)
        return {}

    def register_policy(self, policy: PolicyVersion) -> PolicyVersion:
        """Idempotent registration; changing a referenced policy is rejected."""
        key = f"{policy.policy_id}@{policy.version}"
        registry = self._load_policies()
        existing = registry.get(key)
        if existing is not None:
            if existing == policy.to_dict():
                return policy
            if self._policy_referenced(policy.ref):
                raise PolicyImmutable(f"{key} is referenced by a published version")
        registry[key] = policy.to_dict()
        _atomic_write(self.policies_path, json.dumps(registry, indent=2, sort_keys=True))
        return policy

    def get_policy(self, policy_id, version) -> PolicyVersion:
        registry = self._load_policies()
        key = f"{policy_id}@{version}"
        if key not in registry:
            raise NotFound(f"policy {key} not registered")
        return PolicyVersion.from_dict(registry[key])

    def _policy_referenced(self, policy_ref) -> bool:
        for vid in self.list_versions():
            manifest = self._read_manifest(vid)
            if (manifest["policy_id"], manifest["policy_version"]) == policy_ref:
                return True
        return False

    # -- versions ------------------------------------------------------------

    def version_dir(self, version_id):
        return os.path.join(self.root, "versions", version_id)

    def list_versions(self):
        vdir = os.path.join(self.root, "versions")
        return sorted(d for d in os.listdir(vdir) if os.path.isdir(os.path.join(vdir, d)))

    def publish(self, labels, policy: PolicyVersion, parent_id=None) -> GdsVersion:
        """Publish a new version; re-publishing identical inputs is a no-op."""
        self.register_policy(policy)
        parent = self.get_version(parent_id) if parent_id else None
        version = build_version(self.load_pool(), parent, labels, policy)
        vdir = self.version_dir(version.version_id)
        if os.path.isdir(vdir):
            return self.get_version(version.version_id)
        tmp = vdir + ".tmp"
        os.makedirs(tmp, exist_ok=True)
        with open(os.path.join(tmp, "records.jsonl"), "w") as fh:
            fh.write(version.records_lines())
        with open(os.path.join(tmp, "manifest.json"), "w") as fh:
            json.dump(version.manifest(), fh, indent=2, sort_keys=True)
        os.rename(tmp, vdir)
        return version

    def _read_manifest(self, version_id) -> dict:
        path = os.path.join(self.version_dir(version_id), "manifest.json")
        if not os.path.exists(path):
            raise NotFound(f"version {version_id} not found")
        with open(path) as fh:
            return json.load(fh)

    def get_version(self, version_id) -> GdsVersion:
        manifest = self._read_manifest(version_id)
        rec_path = os.path.join(self.version_dir(version_id), "records.jsonl")
        with open(rec_path, "rb") as fh:
            raw = fh.read()
        if hashlib.sha256(raw).hexdigest() != manifest["records_digest"]:
            raise CorruptVersion(f"records digest mismatch for {version_id}")
        records = {}
        for line in raw.decode("utf-8").splitlines():
            if line.strip():
                label = GoldLabel.from_dict(json.loads(line))
                records[label.item_id] = label
        recomputed = compute_version_id(
            manifest["parent_id"],
            (manifest["policy_id"], manifest["policy_version"]),
            records,
        )
        if recomputed != manifest["version_id"] or recomputed != version_id:
            raise CorruptVersion(f"version id mismatch for {version_id}")
        return GdsVersion(
            version_id=manifest["version_id"],
            parent_id=manifest["parent_id"],
            policy_id=manifest["policy_id"],
            policy_version=manifest["policy_version"],
            records=records,
            created_at=manifest["created_at"],
        )

    def new_items(self, child_id, parent_id) -> set:
        child = self.get_version(child_id)
        parent = self.get_version(parent_id)
        return new_items(child, parent, resolver=self.get_version)


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
