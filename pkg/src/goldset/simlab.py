"""Desk-scale synthetic data lab.

Generates Gaussian-mixture embeddings with configurable cluster weights
(uniform or Zipf), fits a 256-centroid nearest-centroid quantizer standing
in for a production semantic codebook, and simulates noisy labeling agents
(per-class sensitivity/specificity Bernoulli noise) plus 3x majority voting.
Everything is deterministic given seeds.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .model import (
    CODEBOOK_SIZE,
    ContentItem,
    PolicyVersion,
    GoldLabel,
    AgentDecision,
    canonical_json,
    now_iso,
)
from .store import ContentPool, GdsVersion
from .errors import TooFewSamples, BadConfig, Misaligned, NonBinaryPolicy

KMEANS_ITERATIONS = 25


@dataclass(frozen=True)
class Quantizer:
    """Nearest-centroid 256-way vector quantizer (Euclidean, ties -> lowest index)."""

    centroids: tuple  # 256 x D nested tuples
    seed: int

    def quantize(self, embeddings) -> np.ndarray:
        X = np.atleast_2d(np.asarray(embeddings, dtype=float))
        C = np.asarray(self.centroids, dtype=float)
        # argmin over squared distances; np.argmin takes the lowest index on ties
        d2 = (X * X).sum(axis=1)[:, None] - 2 * X @ C.T + (C * C).sum(axis=1)[None, :]
        return np.argmin(d2, axis=1)

    def quantize_one(self, embedding) -> int:
        return int(self.quantize([embedding])[0])

    def to_dict(self):
        return {"centroids": [list(c) for c in self.centroids], "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(centroids=tuple(tuple(c) for c in d["centroids"]), seed=int(d["seed"]))


def fit_quantizer(samples, seed: int = 0) -> Quantizer:
    """K-means with K=256, k-means++ style seeding, fixed iteration count.

    Empty clusters are re-seeded deterministically to the points farthest
    from their assigned centroids.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or len(X) < CODEBOOK_SIZE:
        raise TooFewSamples(f"need >= {CODEBOOK_SIZE} samples, got {len(X)}")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(X, CODEBOOK_SIZE, rng)
    for _ in range(KMEANS_ITERATIONS):
        d2 = _sq_dists(X, centroids)
        assign = np.argmin(d2, axis=1)
        nearest = d2[np.arange(len(X)), assign]
        new_centroids = centroids.copy()
        for k in range(CODEBOOK_SIZE):
            mask = assign == k
            if mask.any():
                new_centroids[k] = X[mask].mean(axis=0)
        empty = [k for k in range(CODEBOOK_SIZE) if not (assign == k).any()]
        if empty:
            # farthest points claim the empty slots, in deterministic order
            order = np.argsort(-nearest, kind="stable")
            for slot, idx in zip(empty, order):
                new_centroids[slot] = X[idx]
        if np.allclose(new_centroids, centroids):
            centroids = new_centroids
            break
        centroids = new_centroids
    return Quantizer(centroids=tuple(tuple(c) for c in centroids), seed=seed)


def _sq_dists(X, C):
    return (X * X).sum(axis=1)[:, None] - 2 * X @ C.T + (C * C).sum(axis=1)[None, :]


def _kmeans_pp_init(X, k, rng):
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(len(X))]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(len(X))
        else:
            idx = rng.choice(len(X), p=d2 / total)
        centroids[i] = X[idx]
        d2 = np.minimum(d2, ((X - centroids[i]) ** 2).sum(axis=1))
    return centroids


@dataclass(frozen=True)
class WorldConfig:
    n_items: int = 1000
    n_clusters: int = 32
    dim: int = 64
    cluster_scale: float = 10.0     # spread of cluster means
    cluster_std: float = 0.5        # within-cluster noise
    weighting: str = "uniform"      # uniform | zipf
    zipf_s: float = 1.2
    positive_rate: float = 0.5      # scalar or per-cluster via positive_rates
    positive_rates: tuple | None = None
    quantizer_sample: int = 20000   # subsample size for fitting the quantizer

    def cluster_weights(self) -> np.ndarray:
        if self.weighting == "uniform":
            w = np.ones(self.n_clusters)
        elif self.weighting == "zipf":
            w = 1.0 / np.arange(1, self.n_clusters + 1) ** self.zipf_s
        else:
            raise BadConfig(f"unknown weighting {self.weighting!r}")
        return w / w.sum()


@dataclass
class SyntheticWorld:
    """Generated universe: items plus their hidden ground-truth labels."""

    config: WorldConfig
    seed: int
    quantizer: Quantizer
    cluster_means: np.ndarray
    cluster_of: dict            # item_id -> cluster index
    truth: dict                 # item_id -> "positive" | "negative"

    def gold_labels(self, item_ids, policy: PolicyVersion, sme_id="sme-sim"):
        pos, neg = policy.label_set[0], policy.label_set[1]
        return [
            GoldLabel(
                item_id=i,
                policy_id=policy.policy_id,
                policy_version=policy.version,
                label=pos if self.truth[i] == "positive" else neg,
                sme_id=sme_id,
                adjudicated=True,
            )
            for i in item_ids
        ]


def generate_world(config: WorldConfig, seed: int = 0):
    """Build a synthetic content pool from a Gaussian mixture.

    Returns (SyntheticWorld, ContentPool). Codes come from a quantizer
    fitted on (a subsample of) the generated embeddings.
    """
    if config.n_clusters < 1 or config.n_items < 1 or config.dim < 1:
        raise BadConfig("need >= 1 cluster, item, and dimension")
    rates = config.positive_rates
    if rates is not None and len(rates) != config.n_clusters:
        raise BadConfig("positive_rates length must equal n_clusters")
    rng = np.random.default_rng(seed)
    means = rng.normal(scale=config.cluster_scale, size=(config.n_clusters, config.dim))
    weights = config.cluster_weights()
    clusters = rng.choice(config.n_clusters, size=config.n_items, p=weights)
    X = means[clusters] + rng.normal(scale=config.cluster_std,
                                     size=(config.n_items, config.dim))
    sample = X
    if len(X) > max(config.quantizer_sample, CODEBOOK_SIZE):
        idx = rng.choice(len(X), size=max(config.quantizer_sample, CODEBOOK_SIZE),
                         replace=False)
        sample = X[idx]
    if len(sample) < CODEBOOK_SIZE:
        # tiny worlds: pad with jittered copies so the quantizer can fit
        reps = int(np.ceil(CODEBOOK_SIZE / len(sample)))
        sample = np.concatenate([sample] * reps)
        sample = sample + rng.normal(scale=1e-3, size=sample.shape)
    quantizer = fit_quantizer(sample, seed=seed)
    codes = quantizer.quantize(X)
    width = len(str(config.n_items))
    stamp = now_iso()
    items, cluster_of, truth = [], {}, {}
    for i in range(config.n_items):
        item_id = f"item-{i:0{width}d}"
        rate = rates[clusters[i]] if rates is not None else config.positive_rate
        items.append(ContentItem(
            item_id=item_id,
            embedding=tuple(X[i]),
            code=int(codes[i]),
            source="synthetic",
            created_at=stamp,
        ))
        cluster_of[item_id] = int(clusters[i])
        truth[item_id] = "positive" if rng.random() < rate else "negative"
    pool = ContentPool(items)
    world = SyntheticWorld(
        config=config,
        seed=seed,
        quantizer=quantizer,
        cluster_means=means,
        cluster_of=cluster_of,
        truth=truth,
    )
    return world, pool


@dataclass(frozen=True)
class NoisyAgentProfile:
    """Class-conditional noisy labeler: P(pos|gold pos), P(neg|gold neg)."""

    agent_id: str
    sensitivity: float
    specificity: float
    seed: int = 0
    prompt: str = ""   # free-text config standing in for an LLM prompt

    def __post_init__(self):
        if not (0.0 <= self.sensitivity <= 1.0 and 0.0 <= self.specificity <= 1.0):
            raise BadConfig("sensitivity/specificity must be in [0, 1]")

    @property
    def config_digest(self) -> str:
        payload = {
            "agent_id": self.agent_id,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "prompt": self.prompt,
        }
        return hashlib.sha256(canonical_json(payload).encode()).hexdigest()

    def to_dict(self):
        return {
            "agent_id": self.agent_id,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "seed": self.seed,
            "prompt": self.prompt,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            agent_id=d["agent_id"],
            sensitivity=float(d["sensitivity"]),
            specificity=float(d["specificity"]),
            seed=int(d.get("seed", 0)),
            prompt=d.get("prompt", ""),
        )


def simulate_agent(profile: NoisyAgentProfile, gds: GdsVersion,
                   policy: PolicyVersion, run_id: str = "run-0"):
    """Per-item Bernoulli decisions against the gold labels, seed-determined.

    The random stream is keyed on (profile.seed, agent_id, run_id) so
    parallel agents draw independent substreams.
    """
    if not policy.is_binary:
        raise NonBinaryPolicy("simulated agents are binary")
    pos, neg = policy.label_set[0], policy.label_set[1]
    key = hashlib.sha256(f"{profile.seed}:{profile.agent_id}:{run_id}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(key[:8], "big"))
    decisions = []
    for item_id in sorted(gds.records):
        gold = gds.records[item_id].label
        u = rng.random()
        if gold == pos:
            label = pos if u < profile.sensitivity else neg
        else:
            label = neg if u < profile.specificity else pos
        decisions.append(AgentDecision(
            agent_id=profile.agent_id,
            run_id=run_id,
            item_id=item_id,
            policy_id=policy.policy_id,
            policy_version=policy.version,
            label=label,
        ))
    return decisions


def majority_vote(decision_sets):
    """Per-item majority over exactly three aligned decision sets."""
    if len(decision_sets) != 3:
        raise Misaligned(f"need exactly 3 decision sets, got {len(decision_sets)}")
    maps = [{d.item_id: d for d in ds} for ds in decision_sets]
    keys = set(maps[0])
    if any(set(m) != keys for m in maps[1:]):
        raise Misaligned("decision sets cover different item sets")
    composite = "maj3(" + ",".join(ds[0].agent_id if ds else "?" for ds in decision_sets) + ")"
    out = []
    for item_id in sorted(keys):
        votes = [m[item_id].label for m in maps]
        label = max(sorted(set(votes)), key=votes.count)  # ties -> lexicographically first
        ref = maps[0][item_id]
        out.append(AgentDecision(
            agent_id=composite,
            run_id=ref.run_id,
            item_id=item_id,
            policy_id=ref.policy_id,
            policy_version=ref.policy_version,
            label=label,
        ))
    return out
