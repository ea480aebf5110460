"""Core domain types: content items, policies, gold labels, agent decisions.

All types are immutable values after construction and serialize to canonical
JSON objects (lower_snake_case field names) that every other module uses as
its wire and file format.
"""
from __future__ import annotations

import json
import math
import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import (
    UnknownLabel,
    PolicyMismatch,
    MalformedItem,
    BadConfig,
)

CODEBOOK_SIZE = 256
DEFAULT_EMBEDDING_DIM = 64

ENTITY_TYPES = ("pin", "image", "text")
SOURCES = ("user_report", "prevalence_sample", "synthetic", "file_import")


def now_iso() -> str:
    """Current UTC time as an ISO-8601 string (persisted-form convention)."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def canonical_json(obj) -> str:
    """Deterministic JSON encoding used for digests and on-disk records."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest_of(obj) -> str:
    """Hex SHA-256 of the canonical JSON encoding of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ContentItem:
    """A unit of content: opaque id, embedding, first-layer semantic code."""

    item_id: str
    embedding: tuple
    code: int
    source: str = "synthetic"
    created_at: str = field(default_factory=now_iso)

    def validate(self, dim: int | None = None) -> "ContentItem":
        if not self.item_id:
            raise MalformedItem("empty item_id")
        if not (0 <= self.code < CODEBOOK_SIZE):
            raise MalformedItem(f"code {self.code} outside [0, {CODEBOOK_SIZE - 1}]")
        if self.source not in SOURCES:
            raise MalformedItem(f"unknown source {self.source!r}")
        if dim is not None and len(self.embedding) != dim:
            raise MalformedItem(
                f"embedding length {len(self.embedding)} != deployment dim {dim}"
            )
        if any(not math.isfinite(v) for v in self.embedding):
            raise MalformedItem("non-finite embedding entry")
        return self

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "embedding": list(self.embedding),
            "code": self.code,
            "source": self.source,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContentItem":
        return cls(
            item_id=d["item_id"],
            embedding=tuple(float(v) for v in d["embedding"]),
            code=int(d["code"]),
            source=d.get("source", "synthetic"),
            created_at=d.get("created_at") or now_iso(),
        )


@dataclass(frozen=True)
class PolicyVersion:
    """One immutable version of a moderation policy and its label set."""

    policy_id: str
    version: int
    label_set: tuple = ("positive", "negative")
    entity_type: str = "pin"
    guideline_digest: str = ""

    def __post_init__(self):
        if self.version < 1:
            raise BadConfig("policy version must be a positive integer")
        if len(set(self.label_set)) < 2 or len(self.label_set) != len(set(self.label_set)):
            raise BadConfig("label_set needs >= 2 distinct names")
        if self.entity_type not in ENTITY_TYPES:
            raise BadConfig(f"unknown entity_type {self.entity_type!r}")

    @property
    def ref(self) -> tuple:
        return (self.policy_id, self.version)

    @property
    def positive_label(self) -> str:
        # Positive class is label_set[0] by convention for binary metrics.
        return self.label_set[0]

    @property
    def is_binary(self) -> bool:
        return len(self.label_set) == 2

    def to_dict(self) -> dict:
        return {
            "policy_id": self.policy_id,
            "version": self.version,
            "label_set": list(self.label_set),
            "entity_type": self.entity_type,
            "guideline_digest": self.guideline_digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyVersion":
        return cls(
            policy_id=d["policy_id"],
            version=int(d["version"]),
            label_set=tuple(d["label_set"]),
            entity_type=d.get("entity_type", "pin"),
            guideline_digest=d.get("guideline_digest", ""),
        )


@dataclass(frozen=True)
class GoldLabel:
    """An SME ground-truth label for one item under one policy version."""

    item_id: str
    policy_id: str
    policy_version: int
    label: str
    sme_id: str = ""
    adjudicated: bool = False

    def validate(self, policy: PolicyVersion) -> "GoldLabel":
        if (self.policy_id, self.policy_version) != policy.ref:
            raise PolicyMismatch(
                f"label references {self.policy_id}@{self.policy_version}, "
                f"expected {policy.policy_id}@{policy.version}"
            )
        if self.label not in policy.label_set:
            raise UnknownLabel(f"label {self.label!r} not in {list(policy.label_set)}")
        return self

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "policy_id": self.policy_id,
            "policy_version": self.policy_version,
            "label": self.label,
            "sme_id": self.sme_id,
            "adjudicated": self.adjudicated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GoldLabel":
        return cls(
            item_id=d["item_id"],
            policy_id=d["policy_id"],
            policy_version=int(d["policy_version"]),
            label=d["label"],
            sme_id=d.get("sme_id", ""),
            adjudicated=bool(d.get("adjudicated", False)),
        )


@dataclass(frozen=True)
class AgentDecision:
    """One agent's label for one item in one evaluation run."""

    agent_id: str
    run_id: str
    item_id: str
    policy_id: str
    policy_version: int
    label: str
    decided_at: str = field(default_factory=now_iso)

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "run_id": self.run_id,
            "item_id": self.item_id,
            "policy_id": self.policy_id,
            "policy_version": self.policy_version,
            "label": self.label,
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AgentDecision":
        return cls(
            agent_id=d["agent_id"],
            run_id=d["run_id"],
            item_id=d["item_id"],
            policy_id=d["policy_id"],
            policy_version=int(d["policy_version"]),
            label=d["label"],
            decided_at=d.get("decided_at", now_iso()),
        )


def validate_decision(decision: AgentDecision, policy: PolicyVersion) -> AgentDecision:
    """Check a decision against the policy it claims to target.

    Returns the decision unchanged when its label belongs to the policy's
    label set and the (policy_id, version) pair matches.
    """
    if (decision.policy_id, decision.policy_version) != policy.ref:
        raise PolicyMismatch(
            f"decision targets {decision.policy_id}@{decision.policy_version}, "
            f"policy is {policy.policy_id}@{policy.version}"
        )
    if decision.label not in policy.label_set:
        raise UnknownLabel(f"label {decision.label!r} not in {list(policy.label_set)}")
    return decision
