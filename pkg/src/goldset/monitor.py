"""Continuous validation monitors.

Two tracks guard prevalence measurement quality: the drift track scores an
agent only on items newly added between two golden-set versions (is quality
degrading as content evolves?), and the stability track re-scores the same
agent configuration against a pinned version (is the system itself stable?).
Both compare the primary metric against a stored baseline with a seeded
percentile-bootstrap confidence interval on the delta.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import PolicyVersion, now_iso, canonical_json
from .store import GdsVersion, new_items
from .errors import BadConfig
from . import metrics


@dataclass(frozen=True)
class MonitorConfig:
    primary_metric: str = "informedness"
    threshold_pp: float = 5.0
    min_n: int = 50
    resamples: int = 1000
    seed: int = 0
    ci_level: float = 0.95


DRIFT_DEFAULTS = MonitorConfig(threshold_pp=5.0)
STABILITY_DEFAULTS = MonitorConfig(threshold_pp=1.0)


@dataclass(frozen=True)
class MonitorBaseline:
    agent_id: str
    config_digest: str
    pinned_version: str
    baseline_report: metrics.QualityReport
    created_at: str = field(default_factory=now_iso)

    def to_dict(self):
        return {
            "agent_id": self.agent_id,
            "config_digest": self.config_digest,
            "pinned_version": self.pinned_version,
            "baseline_report": self.baseline_report.to_dict(),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            agent_id=d["agent_id"],
            config_digest=d["config_digest"],
            pinned_version=d["pinned_version"],
            baseline_report=metrics.QualityReport.from_dict(d["baseline_report"]),
            created_at=d.get("created_at", now_iso()),
        )


@dataclass(frozen=True)
class AlertResult:
    track: str                  # drift | stability
    status: str                 # pass | alert
    reason: str                 # ok | threshold_exceeded | insufficient_data | config_digest_mismatch
    metric_deltas: dict         # per-metric pp deltas vs baseline (None = undefined)
    ci_low: float | None
    ci_high: float | None
    sample_size: int
    primary_metric: str

    def to_dict(self):
        return {
            "track": self.track,
            "status": self.status,
            "reason": self.reason,
            "metric_deltas": dict(self.metric_deltas),
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "sample_size": self.sample_size,
            "primary_metric": self.primary_metric,
        }


def _score_arrays(decisions, records, policy):
    """Aligned (gold_is_pos, decided_pos) boolean arrays over scored items."""
    pos = policy.positive_label
    by_item = {d.item_id: d.label for d in decisions if d.item_id in records}
    items = sorted(by_item)
    gold = np.array([records[i].label == pos for i in items])
    decided = np.array([by_item[i] == pos for i in items])
    return gold, decided


def _metric_from_arrays(gold, decided, name):
    tp = int((gold & decided).sum())
    fp = int((~gold & decided).sum())
    fn = int((gold & ~decided).sum())
    tn = int((~gold & ~decided).sum())
    report = metrics.quality_report(metrics.ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn))
    return report, report.metric(name)


def _bootstrap_ci(gold, decided, name, baseline_value, config):
    """Percentile CI on (metric - baseline) in pp over item resamples."""
    rng = np.random.default_rng(config.seed)
    n = len(gold)
    deltas = []
    for _ in range(config.resamples):
        idx = rng.integers(0, n, size=n)
        try:
            _, value = _metric_from_arrays(gold[idx], decided[idx], name)
        except Exception:
            continue
        if value is not None:
            deltas.append((value - baseline_value) * 100.0)
    if not deltas:
        return None, None
    alpha = (1.0 - config.ci_level) / 2.0
    low, high = np.quantile(deltas, [alpha, 1.0 - alpha])
    return float(low), float(high)


def _check(track, gold, decided, baseline, config):
    n = len(gold)
    if n < config.min_n:
        return AlertResult(
            track=track, status="alert", reason="insufficient_data",
            metric_deltas={}, ci_low=None, ci_high=None,
            sample_size=n, primary_metric=config.primary_metric,
        )
    report, value = _metric_from_arrays(gold, decided, config.primary_metric)
    baseline_value = baseline.baseline_report.metric(config.primary_metric)
    if value is None or baseline_value is None:
        raise BadConfig(f"primary metric {config.primary_metric!r} undefined")
    delta = (value - baseline_value) * 100.0
    rel = metrics.relative_report(baseline.baseline_report, report,
                                  baseline.agent_id, baseline.agent_id)
    ci_low, ci_high = _bootstrap_ci(gold, decided, config.primary_metric,
                                    baseline_value, config)
    excludes_zero = ci_low is not None and (ci_low > 0.0 or ci_high < 0.0)
    alert = abs(delta) > config.threshold_pp and excludes_zero
    return AlertResult(
        track=track,
        status="alert" if alert else "pass",
        reason="threshold_exceeded" if alert else "ok",
        metric_deltas=rel.deltas,
        ci_low=ci_low,
        ci_high=ci_high,
        sample_size=n,
        primary_metric=config.primary_metric,
    )


def drift_check(decisions, child: GdsVersion, parent: GdsVersion,
                baseline: MonitorBaseline, policy: PolicyVersion,
                config: MonitorConfig = DRIFT_DEFAULTS, resolver=None) -> AlertResult:
    """Content-drift track: evaluate only on items new in ``child``.

    Items already present in the parent version are never scored, even if
    decisions for them are supplied.
    """
    fresh = new_items(child, parent, resolver)
    records = {i: child.records[i] for i in fresh}
    gold, decided = _score_arrays(decisions, records, policy)
    return _check("drift", gold, decided, baseline, config)


def stability_check(decisions, pinned: GdsVersion, baseline: MonitorBaseline,
                    policy: PolicyVersion, config_digest: str,
                    config: MonitorConfig = STABILITY_DEFAULTS) -> AlertResult:
    """System-stability track: same agent, same config, same pinned data.

    A changed config digest is itself an alert (the premise of the track is
    that everything is constant). Items outside the pinned version are
    never scored.
    """
    if config_digest != baseline.config_digest:
        return AlertResult(
            track="stability", status="alert", reason="config_digest_mismatch",
            metric_deltas={}, ci_low=None, ci_high=None,
            sample_size=0, primary_metric=config.primary_metric,
        )
    gold, decided = _score_arrays(decisions, pinned.records, policy)
    return _check("stability", gold, decided, baseline, config)


def append_alert(path, alert: AlertResult):
    """Append one alert per line to the JSONL alert log."""
    with open(path, "a") as fh:
        fh.write(canonical_json(alert.to_dict()) + "\n")
