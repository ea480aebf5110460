import numpy as np
import pytest

from goldset.model import PolicyVersion, GoldLabel, AgentDecision
from goldset.store import GdsVersion, compute_version_id
from goldset import metrics
from goldset.monitor import (
    MonitorConfig,
    MonitorBaseline,
    drift_check,
    stability_check,
)

POLICY = PolicyVersion(policy_id="adult", version=1)


def version(labels: dict, parent=None) -> GdsVersion:
    records = {
        i: GoldLabel(item_id=i, policy_id="adult", policy_version=1, label=lbl)
        for i, lbl in labels.items()
    }
    if parent is not None:
        merged = dict(parent.records)
        merged.update(records)
        records = merged
    parent_id = parent.version_id if parent is not None else None
    return GdsVersion(
        version_id=compute_version_id(parent_id, POLICY.ref, records),
        parent_id=parent_id, policy_id="adult", policy_version=1, records=records,
    )


def decisions(labels: dict, agent="llm-1"):
    return [AgentDecision(agent_id=agent, run_id="r0", item_id=i,
                          policy_id="adult", policy_version=1, label=lbl)
            for i, lbl in labels.items()]


def balanced_labels(n, prefix="i"):
    return {f"{prefix}{k:04d}": ("positive" if k % 2 else "negative")
            for k in range(n)}


def baseline_from(decisions_list, gds, digest="cfg-1", agent="llm-1"):
    result = metrics.confusion(decisions_list, gds, POLICY)
    return MonitorBaseline(
        agent_id=agent,
        config_digest=digest,
        pinned_version=gds.version_id,
        baseline_report=metrics.quality_report(result.counts),
    )


def flipped(labels, frac, seed):
    rng = np.random.default_rng(seed)
    out = {}
    for i, lbl in labels.items():
        if rng.random() < frac:
            out[i] = "negative" if lbl == "positive" else "positive"
        else:
            out[i] = lbl
    return out


class TestDriftCheck:
    def test_perfect_agent_passes(self):
        parent_labels = balanced_labels(100, "p")
        new_labels = balanced_labels(100, "n")
        parent = version(parent_labels)
        child = version(new_labels, parent=parent)
        base = baseline_from(decisions(parent_labels), parent)
        alert = drift_check(decisions(new_labels), child, parent, base, POLICY)
        assert alert.status == "pass"
        assert alert.metric_deltas["informedness"] == 0.0

    def test_degraded_agent_alerts(self):
        parent_labels = balanced_labels(100, "p")
        new_labels = balanced_labels(500, "n")
        parent = version(parent_labels)
        child = version(new_labels, parent=parent)
        base = baseline_from(decisions(flipped(parent_labels, 0.2, 1)), parent)
        # coin-flip agent on the new content
        rng = np.random.default_rng(2)
        coin = {i: ("positive" if rng.random() < 0.5 else "negative")
                for i in new_labels}
        alert = drift_check(decisions(coin), child, parent, base, POLICY)
        assert alert.status == "alert"
        assert alert.reason == "threshold_exceeded"
        assert alert.metric_deltas["informedness"] < -30

    def test_insufficient_new_items(self):
        parent_labels = balanced_labels(100, "p")
        new_labels = balanced_labels(10, "n")
        parent = version(parent_labels)
        child = version(new_labels, parent=parent)
        base = baseline_from(decisions(parent_labels), parent)
        alert = drift_check(decisions(new_labels), child, parent, base, POLICY)
        assert alert.status == "alert"
        assert alert.reason == "insufficient_data"

    def test_never_scores_parent_items(self):
        parent_labels = balanced_labels(100, "p")
        new_labels = balanced_labels(100, "n")
        parent = version(parent_labels)
        child = version(new_labels, parent=parent)
        base = baseline_from(decisions(parent_labels), parent)
        # adversarial decisions: wrong on every parent item, right on new ones
        wrong_parent = {i: ("negative" if l == "positive" else "positive")
                        for i, l in parent_labels.items()}
        mixed = decisions({**wrong_parent, **new_labels})
        alert = drift_check(mixed, child, parent, base, POLICY)
        assert alert.sample_size == 100  # only the new items
        assert alert.status == "pass"

    def test_bootstrap_deterministic(self):
        parent_labels = balanced_labels(100, "p")
        new_labels = balanced_labels(200, "n")
        parent = version(parent_labels)
        child = version(new_labels, parent=parent)
        base = baseline_from(decisions(flipped(parent_labels, 0.1, 3)), parent)
        d = decisions(flipped(new_labels, 0.1, 4))
        a1 = drift_check(d, child, parent, base, POLICY)
        a2 = drift_check(d, child, parent, base, POLICY)
        assert (a1.ci_low, a1.ci_high) == (a2.ci_low, a2.ci_high)


class TestStabilityCheck:
    def test_identical_rerun_passes(self):
        labels = balanced_labels(200)
        pinned = version(labels)
        d = decisions(flipped(labels, 0.1, 5))
        base = baseline_from(d, pinned)
        alert = stability_check(d, pinned, base, POLICY, "cfg-1")
        assert alert.status == "pass"
        assert alert.metric_deltas["informedness"] == 0.0

    def test_config_digest_mismatch(self):
        labels = balanced_labels(100)
        pinned = version(labels)
        base = baseline_from(decisions(labels), pinned)
        alert = stability_check(decisions(labels), pinned, base, POLICY, "cfg-2")
        assert alert.status == "alert"
        assert alert.reason == "config_digest_mismatch"

    def test_two_percent_flips_alert(self):
        # 2% random flips shift informedness ~ -4 pp on a balanced set;
        # with n=2000 the bootstrap CI excludes 0 with high probability
        labels = balanced_labels(2000)
        pinned = version(labels)
        base = baseline_from(decisions(labels), pinned)
        hits = 0
        for seed in range(20):
            noisy = decisions(flipped(labels, 0.02, seed + 100))
            alert = stability_check(noisy, pinned, base, POLICY, "cfg-1",
                                    MonitorConfig(threshold_pp=1.0, seed=seed))
            hits += alert.status == "alert"
        assert hits >= 18

    def test_never_scores_outside_pinned(self):
        labels = balanced_labels(100)
        pinned = version(labels)
        base = baseline_from(decisions(labels), pinned)
        extra = decisions({**labels, **balanced_labels(50, "x")})
        alert = stability_check(extra, pinned, base, POLICY, "cfg-1")
        assert alert.sample_size == 100

    def test_gold_agent_passes_all_thresholds(self):
        labels = balanced_labels(300)
        pinned = version(labels)
        d = decisions(labels)
        base = baseline_from(d, pinned)
        for threshold in (0.1, 1.0, 5.0):
            alert = stability_check(d, pinned, base, POLICY, "cfg-1",
                                    MonitorConfig(threshold_pp=threshold))
            assert alert.status == "pass"


def test_baseline_round_trip():
    labels = balanced_labels(100)
    pinned = version(labels)
    base = baseline_from(decisions(labels), pinned)
    clone = MonitorBaseline.from_dict(base.to_dict())
    assert clone == base
