"""Decision-quality and dataset-quality metrics.

Covers the binary correctness suite (accuracy through markedness),
two-rater chance-corrected agreement, semantic coverage over the 256-code
space, and base-2 Jensen-Shannon divergence between code distributions.
All operations are pure functions over immutable inputs.

Zero-denominator cells surface as an explicit ``None`` (undefined), never
as a silent zero, and relative reports propagate that marker.
"""
from __future__ import annotations

import io
import csv
from dataclasses import dataclass, field

import numpy as np

from .model import CODEBOOK_SIZE, PolicyVersion
from .errors import (
    NonBinaryPolicy,
    EmptyOverlap,
    UnknownItem,
    LengthMismatch,
    NotNormalized,
    UnknownMetric,
    BadConfig,
)

# Table-1 column order; fpr/fnr are error metrics (lower is better).
METRIC_NAMES = (
    "accuracy",
    "precision",
    "recall",
    "f1",
    "neg_precision",
    "neg_recall",
    "fpr",
    "fnr",
    "informedness",
    "markedness",
    "predicted_positive_fraction",
    "positive_prevalence",
)
ERROR_METRICS = frozenset({"fpr", "fnr"})

CSV_HEADERS = (
    "Acc.", "Prec.", "Recall", "F1", "Neg. Prec.", "Neg. Rec.",
    "FPR", "FNR", "Inform.", "Marked.", "Pred. Pos. Frac.", "Pos. Prev.",
)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}

    @classmethod
    def from_dict(cls, d):
        return cls(tp=d["tp"], fp=d["fp"], tn=d["tn"], fn=d["fn"])


@dataclass(frozen=True)
class ConfusionResult:
    counts: ConfusionCounts
    uncovered: int  # gold items with no agent decision (excluded from counts)

    def to_dict(self):
        return {"counts": self.counts.to_dict(), "uncovered": self.uncovered}


@dataclass(frozen=True)
class QualityReport:
    """The twelve-metric correctness suite; undefined cells are None."""

    counts: ConfusionCounts
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    neg_precision: float | None
    neg_recall: float | None
    fpr: float | None
    fnr: float | None
    informedness: float | None
    markedness: float | None
    predicted_positive_fraction: float | None
    positive_prevalence: float | None

    def metric(self, name):
        if name not in METRIC_NAMES:
            raise UnknownMetric(name)
        return getattr(self, name)

    def to_dict(self):
        d = {name: getattr(self, name) for name in METRIC_NAMES}
        d["counts"] = self.counts.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            counts=ConfusionCounts.from_dict(d["counts"]),
            **{name: d[name] for name in METRIC_NAMES},
        )


def confusion(decisions, truth, policy: PolicyVersion) -> ConfusionResult:
    """Tally agent decisions against a golden-set version (binary policy).

    Gold items without a decision are excluded from the counts and reported
    via ``uncovered``; decisions for items absent from the gold set are an
    error (the caller decides what subset to score).
    """
    if not policy.is_binary:
        raise NonBinaryPolicy(f"{policy.policy_id}@{policy.version} has "
                              f"{len(policy.label_set)} labels")
    pos = policy.positive_label
    by_item = {}
    for d in decisions:
        if d.item_id not in truth.records:
            raise UnknownItem(f"decision for {d.item_id!r} not in gold version")
        by_item[d.item_id] = d.label
    if not by_item:
        raise EmptyOverlap("no decision matches any gold item")
    tp = fp = tn = fn = 0
    for item_id, gold in truth.records.items():
        decided = by_item.get(item_id)
        if decided is None:
            continue
        if gold.label == pos:
            if decided == pos:
                tp += 1
            else:
                fn += 1
        else:
            if decided == pos:
                fp += 1
            else:
                tn += 1
    uncovered = len(truth.records) - len(by_item)
    return ConfusionResult(ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn), uncovered)


def _ratio(num, den):
    return num / den if den > 0 else None


def _sum1(a, b):
    return a + b - 1 if a is not None and b is not None else None


def quality_report(counts: ConfusionCounts) -> QualityReport:
    """Compute the full metric suite from confusion counts (total >= 1)."""
    if counts.total < 1:
        raise BadConfig("confusion counts are empty")
    tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn
    total = counts.total
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    neg_precision = _ratio(tn, tn + fn)
    neg_recall = _ratio(tn, tn + fp)
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return QualityReport(
        counts=counts,
        accuracy=(tp + tn) / total,
        precision=precision,
        recall=recall,
        f1=f1,
        neg_precision=neg_precision,
        neg_recall=neg_recall,
        fpr=_ratio(fp, fp + tn),
        fnr=_ratio(fn, fn + tp),
        informedness=_sum1(recall, neg_recall),
        markedness=_sum1(precision, neg_precision),
        predicted_positive_fraction=(tp + fp) / total,
        positive_prevalence=(tp + fn) / total,
    )


@dataclass(frozen=True)
class KappaResult:
    p_o: float
    p_e: float
    kappa: float | None
    degenerate: bool = False

    def to_dict(self):
        return {"p_o": self.p_o, "p_e": self.p_e, "kappa": self.kappa,
                "degenerate": self.degenerate}


def cohens_kappa(labels_a, labels_b) -> KappaResult:
    """Two-rater chance-corrected agreement over aligned label vectors.

    Chance agreement is the product of per-rater marginal frequencies summed
    over all classes. When both raters are constant and identical the result
    is a degenerate kappa of 1; constant but different raters give an
    undefined kappa.
    """
    labels_a, labels_b = list(labels_a), list(labels_b)
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    n = len(labels_a)
    if n < 1:
        raise LengthMismatch("empty label vectors")
    p_o = sum(a == b for a, b in zip(labels_a, labels_b)) / n
    classes = set(labels_a) | set(labels_b)
    p_e = sum(
        (labels_a.count(c) / n) * (labels_b.count(c) / n) for c in classes
    )
    if len(set(labels_a)) == 1 and len(set(labels_b)) == 1:
        # both raters constant: chance-correction is meaningless
        if labels_a[0] == labels_b[0]:
            return KappaResult(p_o=1.0, p_e=1.0, kappa=1.0, degenerate=True)
        return KappaResult(p_o=p_o, p_e=p_e, kappa=None, degenerate=True)
    if p_e >= 1.0 - 1e-15:
        return KappaResult(p_o=p_o, p_e=p_e, kappa=None, degenerate=True)
    return KappaResult(p_o=p_o, p_e=p_e, kappa=(p_o - p_e) / (1 - p_e))


@dataclass(frozen=True)
class CodeDistribution:
    """Empirical distribution over the 256 first-layer semantic codes."""

    probs: tuple

    def __post_init__(self):
        if len(self.probs) != CODEBOOK_SIZE:
            raise NotNormalized(f"expected {CODEBOOK_SIZE} bins, got {len(self.probs)}")
        arr = np.asarray(self.probs, dtype=float)
        if (arr < 0).any() or abs(arr.sum() - 1.0) > 1e-9:
            raise NotNormalized("probabilities must be non-negative and sum to 1")

    @property
    def support_count(self) -> int:
        return int((np.asarray(self.probs) > 0).sum())

    @classmethod
    def from_codes(cls, codes) -> "CodeDistribution":
        counts = np.bincount(np.asarray(list(codes), dtype=int), minlength=CODEBOOK_SIZE)
        if counts.sum() == 0:
            raise NotNormalized("no codes to build a distribution from")
        return cls(probs=tuple(counts / counts.sum()))

    def to_dict(self):
        return {"probs": list(self.probs), "support_count": self.support_count}


@dataclass(frozen=True)
class DivergenceResult:
    jsd: float
    kl_p_m: float
    kl_q_m: float

    def to_dict(self):
        return {"jsd": self.jsd, "kl_p_m": self.kl_p_m, "kl_q_m": self.kl_q_m}


def _kl_base2(p, q):
    # 0*log(0/x) contributes 0; q is a pointwise mean so q>0 wherever p>0
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def jsd(p: CodeDistribution, q: CodeDistribution) -> DivergenceResult:
    """Base-2 Jensen-Shannon divergence; 0 for identical, 1 for disjoint."""
    pa = np.asarray(p.probs, dtype=float)
    qa = np.asarray(q.probs, dtype=float)
    m = 0.5 * (pa + qa)
    kl_p_m = _kl_base2(pa, m)
    kl_q_m = _kl_base2(qa, m)
    value = 0.5 * kl_p_m + 0.5 * kl_q_m
    return DivergenceResult(jsd=min(max(value, 0.0), 1.0), kl_p_m=kl_p_m, kl_q_m=kl_q_m)


@dataclass(frozen=True)
class DatasetProfile:
    coverage: float
    distribution: CodeDistribution | None
    divergence_vs_production: DivergenceResult | None = None

    def to_dict(self):
        return {
            "coverage": self.coverage,
            "distribution": self.distribution.to_dict() if self.distribution else None,
            "divergence_vs_production": (
                self.divergence_vs_production.to_dict()
                if self.divergence_vs_production else None
            ),
        }


def semantic_coverage(items) -> DatasetProfile:
    """Coverage = distinct first-layer codes / 256, plus the code distribution."""
    codes = [item.code for item in items]
    if not codes:
        return DatasetProfile(coverage=0.0, distribution=None)
    distribution = CodeDistribution.from_codes(codes)
    return DatasetProfile(
        coverage=len(set(codes)) / CODEBOOK_SIZE,
        distribution=distribution,
    )


def profile_dataset(items, production_items=None) -> DatasetProfile:
    """Full profile: coverage, distribution, and JSD vs a production sample."""
    profile = semantic_coverage(items)
    if production_items is not None and profile.distribution is not None:
        prod = CodeDistribution.from_codes(item.code for item in production_items)
        return DatasetProfile(
            coverage=profile.coverage,
            distribution=profile.distribution,
            divergence_vs_production=jsd(profile.distribution, prod),
        )
    return profile


@dataclass(frozen=True)
class RelativeReport:
    """Per-metric (subject - baseline) deltas in percentage points."""

    baseline_agent_id: str
    subject_agent_id: str
    deltas: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "baseline_agent_id": self.baseline_agent_id,
            "subject_agent_id": self.subject_agent_id,
            "deltas": dict(self.deltas),
        }


def relative_report(baseline: QualityReport, subject: QualityReport,
                    baseline_agent_id="baseline", subject_agent_id="subject") -> RelativeReport:
    deltas = {}
    for name in METRIC_NAMES:
        b, s = baseline.metric(name), subject.metric(name)
        deltas[name] = (s - b) * 100.0 if b is not None and s is not None else None
    return RelativeReport(baseline_agent_id, subject_agent_id, deltas)


def exit_criterion(report: RelativeReport, metric: str, threshold_pp: float) -> bool:
    """Prompt exit rule: improvement of at least ``threshold_pp`` points.

    Performance metrics must move up; error metrics (fpr, fnr) must move
    down by at least the threshold. Undefined deltas never pass.
    """
    if metric not in METRIC_NAMES:
        raise UnknownMetric(metric)
    delta = report.deltas.get(metric)
    if delta is None:
        return False
    if metric in ERROR_METRICS:
        return delta <= -threshold_pp
    return delta >= threshold_pp


def reports_to_csv(reports: dict) -> str:
    """CSV export with Table-1 column ordering; one row per labeler."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(("Labeler",) + CSV_HEADERS)
    for name in sorted(reports):
        report = reports[name]
        row = [name]
        for metric in METRIC_NAMES:
            value = report.metric(metric)
            row.append("undefined" if value is None else f"{value:.6f}")
        writer.writerow(row)
    return buf.getvalue()
