"""Model-driven active sampling.

Trains a propensity model p(item in GDS | embedding) on the current pool
and golden-set membership, then selects the next labeling batch by inverse
propensity: low-score (novel) items are prioritized, either deterministically
(bottom-k) or stochastically (weighted sampling without replacement via
exponential keys). A small experiment runner compares propensity-driven
expansion against uniform sampling on coverage.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .model import CODEBOOK_SIZE, canonical_json
from .errors import SingleClass, EmptyCandidates, BadConfig

SCORE_FLOOR = 1e-6
WEIGHT_EPS = 1e-3


@dataclass(frozen=True)
class TrainConfig:
    kind: str = "logistic"           # logistic | rbf_logistic | kernel | boosted_stumps
    iterations: int = 500
    learning_rate: float = 0.1
    l2: float = 1e-3
    stump_rounds: int = 100
    stump_learning_rate: float = 0.2
    rbf_features: int = 256
    kernel_ref: int = 2000
    seed: int = 0


@dataclass
class PropensityModel:
    """Calibrated binary membership classifier over raw embeddings."""

    kind: str
    feature_dim: int
    parameters: dict
    training_meta: dict = field(default_factory=dict)

    def predict(self, embeddings) -> np.ndarray:
        """Membership probabilities, clamped strictly inside (0, 1)."""
        X = np.atleast_2d(np.asarray(embeddings, dtype=float))
        if self.kind == "logistic":
            mean = np.asarray(self.parameters["feature_mean"])
            std = np.asarray(self.parameters["feature_std"])
            w = np.asarray(self.parameters["weights"])
            b = self.parameters["intercept"]
            z = ((X - mean) / std) @ w + b
        elif self.kind == "rbf_logistic":
            Phi = _rff(X, np.asarray(self.parameters["rff_w"]),
                       np.asarray(self.parameters["rff_b"]))
            z = Phi @ np.asarray(self.parameters["weights"]) + self.parameters["intercept"]
        elif self.kind == "kernel":
            ref = np.asarray(self.parameters["ref_points"])
            member = np.asarray(self.parameters["ref_member"], dtype=bool)
            sigma = self.parameters["bandwidth"]
            alpha = self.parameters["alpha"]
            prior = self.parameters["prior"]
            d2 = (X * X).sum(axis=1)[:, None] - 2 * X @ ref.T + (ref * ref).sum(axis=1)
            K = np.exp(-np.maximum(d2, 0.0) / (2.0 * sigma * sigma))
            p = (K[:, member].sum(axis=1) + alpha * prior) / (K.sum(axis=1) + alpha)
            return np.clip(p, SCORE_FLOOR, 1.0 - SCORE_FLOOR)
        elif self.kind == "boosted_stumps":
            z = np.full(len(X), self.parameters["base_score"], dtype=float)
            for f, thr, left, right in self.parameters["stumps"]:
                z += np.where(X[:, int(f)] <= thr, left, right)
        else:
            raise BadConfig(f"unknown model kind {self.kind!r}")
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
        return np.clip(p, SCORE_FLOOR, 1.0 - SCORE_FLOOR)

    def to_dict(self):
        params = dict(self.parameters)
        for key, value in params.items():
            if isinstance(value, np.ndarray):
                params[key] = value.tolist()
        return {
            "kind": self.kind,
            "feature_dim": self.feature_dim,
            "parameters": params,
            "training_meta": dict(self.training_meta),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            feature_dim=int(d["feature_dim"]),
            parameters=d["parameters"],
            training_meta=d.get("training_meta", {}),
        )


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _auc(scores, y):
    """Rank-based AUC (Mann-Whitney)."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    ranks[order] = np.arange(1, len(scores) + 1)
    # average ranks for ties
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = (i + 1 + j + 1) / 2.0
        i = j + 1
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _train_logistic(X, y, config):
    """Full-batch gradient descent on L2-regularized logloss, fixed schedule."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Xs = (X - mean) / std
    n, d = Xs.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(config.iterations):
        p = _sigmoid(Xs @ w + b)
        err = p - y
        grad_w = Xs.T @ err / n + config.l2 * w
        grad_b = err.mean()
        w -= config.learning_rate * grad_w
        b -= config.learning_rate * grad_b
    return {
        "weights": w,
        "intercept": float(b),
        "feature_mean": mean,
        "feature_std": std,
    }


def _rff(X, W, b):
    """Random Fourier features approximating a Gaussian kernel."""
    m = W.shape[0]
    return np.sqrt(2.0 / m) * np.cos(X @ W.T + b)


def _train_rbf_logistic(X, y, config):
    """Kernel-style logistic: GD on random Fourier features of the embedding.

    Bandwidth comes from a low percentile of pairwise distances in a fixed
    subsample, which tracks the within-cluster scale on clustered data.
    """
    rng = np.random.default_rng(config.seed)
    sigma = _bandwidth(X, rng)
    m = config.rbf_features
    W = rng.normal(scale=1.0 / sigma, size=(m, X.shape[1]))
    b = rng.uniform(0, 2 * np.pi, size=m)
    Phi = _rff(X, W, b)
    n = len(X)
    w = np.zeros(m)
    bias = 0.0
    for _ in range(config.iterations):
        p = _sigmoid(Phi @ w + bias)
        err = p - y
        w -= config.learning_rate * (Phi.T @ err / n + config.l2 * w)
        bias -= config.learning_rate * err.mean()
    return {"weights": w, "intercept": float(bias), "rff_w": W, "rff_b": b,
            "bandwidth": sigma}


def _bandwidth(X, rng):
    """Median nearest-neighbor distance of a subsample (local scale), doubled."""
    sub = X if len(X) <= 500 else X[rng.choice(len(X), size=500, replace=False)]
    d2 = _sq_pairwise(sub)
    np.fill_diagonal(d2, np.inf)
    nn = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
    return max(2.0 * float(np.median(nn)), 1e-6)


def _train_kernel(X, y, config):
    """Smoothed Gaussian-kernel estimate of p(member | embedding).

    Non-parametric: the 'parameters' are a reference subsample of the pool
    with its membership flags. Score = kernel-weighted member fraction,
    shrunk toward the base rate by the pseudo-count alpha.
    """
    rng = np.random.default_rng(config.seed)
    sigma = _bandwidth(X, rng)
    max_ref = config.kernel_ref
    if len(X) > max_ref:
        # keep every member plus a seeded subsample of non-members
        members = np.flatnonzero(y == 1)
        others = np.flatnonzero(y == 0)
        take = max(max_ref - len(members), 0)
        keep = np.sort(np.concatenate(
            [members, rng.choice(others, size=min(take, len(others)), replace=False)]))
    else:
        keep = np.arange(len(X))
    return {
        "ref_points": X[keep],
        "ref_member": (y[keep] == 1),
        "bandwidth": sigma,
        "alpha": 1.0,
        "prior": float(y.mean()),
    }


def _sq_pairwise(A):
    s = (A * A).sum(axis=1)
    return s[:, None] - 2 * A @ A.T + s[None, :]


def _train_boosted_stumps(X, y, config):
    """Gradient boosting with depth-1 regression stumps on the logit scale."""
    n, d = X.shape
    prior = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    base = float(np.log(prior / (1 - prior)))
    F = np.full(n, base)
    stumps = []
    # candidate thresholds: deciles per feature, fixed per training run
    qs = np.quantile(X, np.linspace(0.1, 0.9, 9), axis=0)
    for _ in range(config.stump_rounds):
        residual = y - _sigmoid(F)
        best = None
        for f in range(d):
            col = X[:, f]
            for thr in qs[:, f]:
                left = col <= thr
                n_left = int(left.sum())
                if n_left == 0 or n_left == n:
                    continue
                lv = residual[left].mean()
                rv = residual[~left].mean()
                gain = n_left * lv * lv + (n - n_left) * rv * rv
                if best is None or gain > best[0]:
                    best = (gain, f, float(thr), float(lv), float(rv))
        if best is None:
            break
        _, f, thr, lv, rv = best
        lr = config.stump_learning_rate
        # residuals live on the probability scale; scale up toward logits
        stumps.append((f, thr, 4.0 * lr * lv, 4.0 * lr * rv))
        F += np.where(X[:, f] <= thr, 4.0 * lr * lv, 4.0 * lr * rv)
    return {"base_score": base, "stumps": stumps}


def train_propensity(pool, gds_item_ids, config: TrainConfig = TrainConfig()) -> PropensityModel:
    """Fit the membership classifier on the full candidate pool.

    ``gds_item_ids`` is the positive class (items already in the golden
    set); everything else in the pool is negative. Deterministic given the
    config seed. Raises SingleClass when the pool is entirely in or out.
    """
    item_ids = sorted(pool.items)
    member = set(gds_item_ids)
    y = np.array([1.0 if i in member else 0.0 for i in item_ids])
    if y.sum() == 0 or y.sum() == len(y):
        raise SingleClass("need at least one item inside and one outside the GDS")
    X = np.array([pool.items[i].embedding for i in item_ids], dtype=float)
    if config.kind == "logistic":
        params = _train_logistic(X, y, config)
    elif config.kind == "rbf_logistic":
        params = _train_rbf_logistic(X, y, config)
    elif config.kind == "kernel":
        params = _train_kernel(X, y, config)
    elif config.kind == "boosted_stumps":
        params = _train_boosted_stumps(X, y, config)
    else:
        raise BadConfig(f"unknown model kind {config.kind!r}")
    model = PropensityModel(kind=config.kind, feature_dim=X.shape[1], parameters=params)
    scores = model.predict(X)
    model.training_meta = {
        "iterations": config.iterations,
        "learning_rate": config.learning_rate,
        "l2": config.l2,
        "seed": config.seed,
        "train_auc": _auc(scores, y),
        "n_train": len(y),
    }
    return model


@dataclass(frozen=True)
class SamplingBatch:
    selected: tuple
    mode: str
    seed: int
    weights_digest: str
    batch_id: str

    def to_dict(self):
        return {
            "batch_id": self.batch_id,
            "selected": list(self.selected),
            "mode": self.mode,
            "seed": self.seed,
            "weights_digest": self.weights_digest,
        }


def select_batch(pool, gds_item_ids, model: PropensityModel, k: int,
                 mode: str = "weighted", seed: int = 0) -> SamplingBatch:
    """Pick the next labeling batch from the pool minus current GDS items.

    bottom_k: the k lowest-score candidates, ties broken by item_id.
    weighted: sampling without replacement with weight 1/(p + eps) using
    the exponential-keys method keyed on ``seed``.
    """
    if k < 1:
        raise BadConfig("k must be >= 1")
    if mode not in ("weighted", "bottom_k"):
        raise BadConfig(f"unknown mode {mode!r}")
    member = set(gds_item_ids)
    candidates = sorted(i for i in pool.items if i not in member)
    if not candidates:
        raise EmptyCandidates("pool minus GDS is empty")
    X = np.array([pool.items[i].embedding for i in candidates], dtype=float)
    scores = model.predict(X)
    weights = 1.0 / (scores + WEIGHT_EPS)
    digest = hashlib.sha256(canonical_json(weights.tolist()).encode()).hexdigest()
    if mode == "bottom_k":
        order = np.lexsort((candidates, scores))
    else:
        rng = np.random.default_rng(seed)
        keys = rng.exponential(size=len(candidates)) / weights
        order = np.lexsort((candidates, keys))
    selected = [candidates[i] for i in order[: min(k, len(candidates))]]
    batch_id = hashlib.sha256(
        canonical_json({"selected": selected, "mode": mode, "seed": seed}).encode()
    ).hexdigest()[:12]
    return SamplingBatch(
        selected=tuple(selected),
        mode=mode,
        seed=seed,
        weights_digest=digest,
        batch_id=batch_id,
    )


def uniform_batch(pool, gds_item_ids, k: int, seed: int = 0) -> SamplingBatch:
    """Seeded uniform draw without replacement; cold-start path when the
    current GDS is empty (or full) and no propensity model can be trained."""
    if k < 1:
        raise BadConfig("k must be >= 1")
    member = set(gds_item_ids)
    candidates = sorted(i for i in pool.items if i not in member)
    if not candidates:
        raise EmptyCandidates("pool minus GDS is empty")
    rng = np.random.default_rng(seed)
    take = min(k, len(candidates))
    selected = sorted(rng.choice(candidates, size=take, replace=False).tolist())
    batch_id = hashlib.sha256(
        canonical_json({"selected": selected, "mode": "uniform", "seed": seed}).encode()
    ).hexdigest()[:12]
    return SamplingBatch(
        selected=tuple(selected),
        mode="uniform",
        seed=seed,
        weights_digest="",
        batch_id=batch_id,
    )


def _coverage(pool, member_ids) -> float:
    codes = {pool.items[i].code for i in member_ids}
    return len(codes) / CODEBOOK_SIZE


def coverage_gain_experiment(pool, initial_member_ids, budget: int, rounds: int,
                             strategy: str = "propensity", seed: int = 0,
                             config: TrainConfig | None = None) -> list:
    """Simulated label-then-retrain loop; returns coverage after each round.

    The trace has ``rounds + 1`` entries: initial coverage, then coverage
    after each labeling round. ``strategy`` is propensity (weighted inverse
    propensity sampling with per-round retraining) or uniform.
    """
    if strategy not in ("propensity", "uniform"):
        raise BadConfig(f"unknown strategy {strategy!r}")
    members = set(initial_member_ids)
    trace = [_coverage(pool, members)]
    rng = np.random.default_rng(seed)
    for rnd in range(rounds):
        candidates = sorted(i for i in pool.items if i not in members)
        take = min(budget, len(candidates))
        if take > 0:
            if strategy == "uniform" or not (0 < len(members) < len(pool.items)):
                # first round with an empty (or full) GDS cannot train: uniform seed
                picked = list(rng.choice(candidates, size=take, replace=False))
            else:
                cfg = config or TrainConfig(kind="kernel")
                model = train_propensity(pool, members, cfg)
                batch = select_batch(pool, members, model, take,
                                     mode="weighted", seed=seed * 1000 + rnd)
                picked = list(batch.selected)
            members.update(picked)
        trace.append(_coverage(pool, members))
    return trace
