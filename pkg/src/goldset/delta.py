"""Policy-update analysis: dual-label transition matrix and Sankey export.

Stage 1 compares the gold labels of the same items under two policy
versions (never touching agent decisions); stage 2 re-benchmarks agents
solely against the new labels (never touching the old ones).
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import PolicyVersion
from .store import GdsVersion
from .errors import SamePolicyVersion, DifferentPolicyFamily, PolicyMismatch
from . import metrics


@dataclass(frozen=True)
class TransitionMatrix:
    """counts[i][j] = items labeled old_labels[i] under v1 and new_labels[j] under v2."""

    old_version: int
    new_version: int
    old_labels: tuple
    new_labels: tuple
    counts: tuple          # tuple of tuples, row-major
    unmatched_old: int     # items only in v1
    unmatched_new: int     # items only in v2

    @property
    def matched(self) -> int:
        return sum(sum(row) for row in self.counts)

    def to_dict(self):
        return {
            "old_version": self.old_version,
            "new_version": self.new_version,
            "old_labels": list(self.old_labels),
            "new_labels": list(self.new_labels),
            "counts": [list(row) for row in self.counts],
            "matched": self.matched,
            "unmatched_old": self.unmatched_old,
            "unmatched_new": self.unmatched_new,
        }


def policy_delta(v1: GdsVersion, v2: GdsVersion,
                 old_policy: PolicyVersion, new_policy: PolicyVersion) -> TransitionMatrix:
    """Label flow between two golden-set versions of the same policy family.

    Computed over the intersection of item ids; items present in only one
    version are reported as unmatched, never silently dropped.
    """
    if v1.policy_id != v2.policy_id:
        raise DifferentPolicyFamily(f"{v1.policy_id} vs {v2.policy_id}")
    if v1.policy_version == v2.policy_version:
        raise SamePolicyVersion(f"both versions use policy v{v1.policy_version}")
    if old_policy.ref != v1.policy_ref or new_policy.ref != v2.policy_ref:
        raise PolicyMismatch("supplied policies do not match the versions")
    old_labels = old_policy.label_set
    new_labels = new_policy.label_set
    old_index = {lbl: i for i, lbl in enumerate(old_labels)}
    new_index = {lbl: j for j, lbl in enumerate(new_labels)}
    counts = [[0] * len(new_labels) for _ in old_labels]
    shared = set(v1.records) & set(v2.records)
    for item_id in shared:
        i = old_index[v1.records[item_id].label]
        j = new_index[v2.records[item_id].label]
        counts[i][j] += 1
    return TransitionMatrix(
        old_version=v1.policy_version,
        new_version=v2.policy_version,
        old_labels=tuple(old_labels),
        new_labels=tuple(new_labels),
        counts=tuple(tuple(row) for row in counts),
        unmatched_old=len(v1.records) - len(shared),
        unmatched_new=len(v2.records) - len(shared),
    )


def sankey_export(t: TransitionMatrix) -> dict:
    """Flow document for Sankey rendering; zero-value links are omitted."""
    nodes = [f"{lbl}@v{t.old_version}" for lbl in t.old_labels]
    nodes += [f"{lbl}@v{t.new_version}" for lbl in t.new_labels]
    offset = len(t.old_labels)
    links = []
    for i, row in enumerate(t.counts):
        for j, value in enumerate(row):
            if value > 0:
                links.append({"source": i, "target": offset + j, "value": value})
    return {"nodes": [{"name": n} for n in nodes], "links": links}


def rebenchmark(agent_decisions: dict, v2: GdsVersion, new_policy: PolicyVersion) -> dict:
    """Evaluate each agent solely against the new labels.

    ``agent_decisions`` maps agent_id -> decision list; decisions for items
    not present in v2 are skipped (they have no new ground truth).
    """
    reports = {}
    for agent_id, decisions in agent_decisions.items():
        scoped = [d for d in decisions if d.item_id in v2.records]
        result = metrics.confusion(scoped, v2, new_policy)
        reports[agent_id] = metrics.quality_report(result.counts)
    return reports
