import numpy as np
import pytest

from goldset.model import ContentItem
from goldset.store import ContentPool
from goldset.sampler import (
    TrainConfig,
    PropensityModel,
    train_propensity,
    select_batch,
    coverage_gain_experiment,
)
from goldset.errors import SingleClass, EmptyCandidates


def cluster_pool(seed=0, n_per=100, dim=8, separation=10.0):
    """Two well-separated Gaussian clusters; cluster A ids start with 'a'."""
    rng = np.random.default_rng(seed)
    items = []
    for prefix, center in (("a", -separation), ("b", separation)):
        X = rng.normal(loc=center, scale=0.5, size=(n_per, dim))
        for k in range(n_per):
            items.append(ContentItem(item_id=f"{prefix}{k:03d}",
                                     embedding=tuple(X[k]), code=0))
    return ContentPool(items)


class TestTrainPropensity:
    def test_separated_clusters(self):
        pool = cluster_pool()
        members = {i for i in pool.items if i.startswith("a")}
        model = train_propensity(pool, members, TrainConfig(seed=1))
        Xa = [pool.items[i].embedding for i in sorted(pool.items) if i.startswith("a")]
        Xb = [pool.items[i].embedding for i in sorted(pool.items) if i.startswith("b")]
        assert model.predict(Xa).mean() > 0.8
        assert model.predict(Xb).mean() < 0.2

    def test_random_membership_auc_near_chance(self):
        pool = cluster_pool(seed=3, n_per=500)
        rng = np.random.default_rng(9)
        members = {i for i in pool.items if rng.random() < 0.5}
        model = train_propensity(pool, members, TrainConfig(seed=1))
        assert 0.45 <= model.training_meta["train_auc"] <= 0.6

    def test_single_class_rejected(self):
        pool = cluster_pool()
        with pytest.raises(SingleClass):
            train_propensity(pool, set(pool.items))
        with pytest.raises(SingleClass):
            train_propensity(pool, set())

    def test_deterministic_given_seed(self):
        pool = cluster_pool()
        members = {i for i in pool.items if i.startswith("a")}
        m1 = train_propensity(pool, members, TrainConfig(seed=5))
        m2 = train_propensity(pool, members, TrainConfig(seed=5))
        assert m1.to_dict() == m2.to_dict()

    def test_scores_strictly_inside_unit_interval(self):
        pool = cluster_pool()
        members = {i for i in pool.items if i.startswith("a")}
        for kind in ("logistic", "rbf_logistic", "kernel", "boosted_stumps"):
            model = train_propensity(pool, members, TrainConfig(kind=kind, seed=1))
            scores = model.predict([pool.items[i].embedding for i in sorted(pool.items)])
            assert (scores > 0).all() and (scores < 1).all()

    def test_serialization_round_trip(self):
        pool = cluster_pool()
        members = {i for i in pool.items if i.startswith("a")}
        model = train_propensity(pool, members, TrainConfig(seed=2))
        clone = PropensityModel.from_dict(model.to_dict())
        X = [pool.items[i].embedding for i in sorted(pool.items)]
        assert np.allclose(model.predict(X), clone.predict(X))


class ScoreStub(PropensityModel):
    """Fixed scores keyed by item id, for select_batch unit tests."""

    def __init__(self, scores, pool):
        self.scores = scores
        self.pool = pool
        self.kind = "stub"
        self.feature_dim = 1
        self.parameters = {}
        self.training_meta = {}
        self._by_embedding = {tuple(pool.items[i].embedding): s
                              for i, s in scores.items()}

    def predict(self, embeddings):
        return np.array([self._by_embedding[tuple(e)] for e in np.atleast_2d(embeddings)])


def stub_pool(scores):
    items = [ContentItem(item_id=i, embedding=(float(k),), code=0)
             for k, i in enumerate(sorted(scores))]
    pool = ContentPool(items)
    return pool, ScoreStub(scores, pool)


class TestSelectBatch:
    def test_k_covers_all_candidates(self):
        pool, model = stub_pool({"a": 0.9, "b": 0.1, "c": 0.5})
        batch = select_batch(pool, set(), model, k=10, mode="weighted", seed=0)
        assert set(batch.selected) == {"a", "b", "c"}

    def test_bottom_k_argmin(self):
        pool, model = stub_pool({"a": 0.9, "b": 0.1, "c": 0.5})
        batch = select_batch(pool, set(), model, k=1, mode="bottom_k", seed=0)
        assert list(batch.selected) == ["b"]

    def test_bottom_k_tie_break_by_item_id(self):
        pool, model = stub_pool({"b": 0.5, "a": 0.5, "c": 0.5})
        batch = select_batch(pool, set(), model, k=2, mode="bottom_k", seed=0)
        assert list(batch.selected) == ["a", "b"]

    def test_excludes_gds_items(self):
        pool, model = stub_pool({"a": 0.9, "b": 0.1, "c": 0.5})
        batch = select_batch(pool, {"b"}, model, k=5, mode="bottom_k", seed=0)
        assert "b" not in batch.selected

    def test_empty_candidates(self):
        pool, model = stub_pool({"a": 0.5})
        with pytest.raises(EmptyCandidates):
            select_batch(pool, {"a"}, model, k=1)

    def test_deterministic_given_seed(self):
        pool, model = stub_pool({f"i{k}": 0.1 + 0.008 * k for k in range(100)})
        b1 = select_batch(pool, set(), model, k=10, mode="weighted", seed=77)
        b2 = select_batch(pool, set(), model, k=10, mode="weighted", seed=77)
        assert b1 == b2

    def test_weighted_two_candidate_frequency(self):
        # closed form: w1/(w1+w2) with w = 1/(p + 1e-3)
        pool, model = stub_pool({"lo": 0.1, "hi": 0.9})
        w_lo, w_hi = 1 / 0.101, 1 / 0.901
        expected = w_lo / (w_lo + w_hi)
        hits = sum(
            select_batch(pool, set(), model, k=1, mode="weighted", seed=s)
            .selected[0] == "lo"
            for s in range(10000)
        )
        assert hits / 10000 == pytest.approx(expected, abs=0.02)

    def test_weight_monotonicity_three_candidates(self):
        pool, model = stub_pool({"a": 0.05, "b": 0.4, "c": 0.8})
        first = {"a": 0, "b": 0, "c": 0}
        for s in range(4000):
            batch = select_batch(pool, set(), model, k=1, mode="weighted", seed=s)
            first[batch.selected[0]] += 1
        assert first["a"] > first["b"] > first["c"]


class TestCoverageGainExperiment:
    def test_zero_budget_constant_trace(self):
        pool = cluster_pool()
        members = {i for i in list(pool.items)[:20]}
        trace = coverage_gain_experiment(pool, members, budget=0, rounds=5,
                                         strategy="uniform", seed=0)
        assert len(trace) == 6
        assert len(set(trace)) == 1

    def test_uniform_matches_coupon_collector(self):
        # uniform pool: one item per code, expected distinct bins after n draws
        # without replacement from a uniform pool follows the hypergeometric
        # mean; with one item per code it is exactly n bins
        rng = np.random.default_rng(0)
        items = [ContentItem(item_id=f"i{k:03d}",
                             embedding=tuple(rng.normal(size=4)), code=k % 256)
                 for k in range(256)]
        pool = ContentPool(items)
        trace = coverage_gain_experiment(pool, set(), budget=64, rounds=2,
                                         strategy="uniform", seed=1)
        assert trace[0] == 0.0
        assert trace[1] == pytest.approx(64 / 256)
        assert trace[2] == pytest.approx(128 / 256)

    def test_uniform_multinomial_expectation(self):
        # many items per code, sampling n uniformly: expected distinct codes
        # ~ K * (1 - (1 - 1/K)^n); check within Monte Carlo error over seeds
        rng = np.random.default_rng(5)
        K, per = 64, 40
        items = [ContentItem(item_id=f"i{k:05d}",
                             embedding=tuple(rng.normal(size=2)), code=k % K)
                 for k in range(K * per)]
        pool = ContentPool(items)
        n = 100
        finals = [coverage_gain_experiment(pool, set(), budget=n, rounds=1,
                                           strategy="uniform", seed=s)[-1]
                  for s in range(30)]
        expected_bins = K * (1 - (1 - 1 / K) ** n)
        assert np.mean(finals) * 256 == pytest.approx(expected_bins, rel=0.05)

    def test_trace_is_monotone(self):
        pool = cluster_pool(n_per=200)
        trace = coverage_gain_experiment(pool, set(), budget=20, rounds=4,
                                         strategy="uniform", seed=3)
        assert all(b >= a for a, b in zip(trace, trace[1:]))
