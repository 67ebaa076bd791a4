import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedrank.core import Document, FusionModel, QueryGroup, ValidationError, index_record_types
from fedrank.fusion import (
    collate,
    fusion_coordinate_ascent,
    fusion_features,
    normalize_shard_scores,
    pairwise_linear_init,
    stochastic_search,
    trace_rows,
    truncate_shards,
)
from fedrank.objective import FusionObjective
from fedrank.simplex import SSConfig
from fedrank.synthetic import planted_fusion_dataset
from oracles import sort_oracle

TYPES = index_record_types(["a", "b"])


def two_shards():
    rows = [("a1", "a", 0.9, 1), ("a2", "a", 0.4, 0), ("b1", "b", 0.7, 0), ("b2", "b", 0.5, 1)]
    docs = tuple(Document(d, TYPES[t], {}, y) for d, t, _, y in rows)
    return QueryGroup("q", docs, {d: s for d, _, s, _ in rows})


def kendall_tau(x, y):
    n, s = len(x), 0
    for i in range(n):
        for j in range(i + 1, n):
            s += np.sign(x[i] - x[j]) * np.sign(y[i] - y[j])
    return s / (n * (n - 1) / 2)


class TestCollate:
    def test_equal_weights(self):
        r = collate(two_shards(), FusionModel({"a": 1.0, "b": 1.0}))
        assert r.doc_ids == ("a1", "b1", "b2", "a2")

    def test_boosted_type(self):
        r = collate(two_shards(), FusionModel({"a": 1.0, "b": 2.0}))
        assert r.doc_ids == ("b1", "b2", "a1", "a2")
        assert r.scores == pytest.approx((1.4, 1.0, 0.9, 0.4))

    def test_missing_type(self):
        with pytest.raises(ValidationError, match="'b'"):
            collate(two_shards(), FusionModel({"a": 1.0}))

    def test_missing_score(self):
        q = two_shards()
        broken = QueryGroup("q", q.documents, {k: v for k, v in q.shard_scores.items() if k != "b2"})
        with pytest.raises(ValidationError, match="b2"):
            collate(broken, FusionModel({"a": 1.0, "b": 1.0}))

    def test_features(self):
        feats = fusion_features(two_shards(), [TYPES["a"], TYPES["b"]])
        assert feats == [{0: 0.9}, {0: 0.4}, {1: 0.7}, {1: 0.5}]

    def test_matches_sort_oracle(self):
        data = planted_fusion_dataset(1, n_queries=5)
        w = {"type0": 0.3, "type1": 1.7, "type2": 0.9, "type3": 2.2}
        for q in data.queries:
            pairs = [(d.doc_id, w[d.record_type.name] * q.shard_scores[d.doc_id]) for d in q.documents]
            assert list(collate(q, FusionModel(w)).doc_ids) == sort_oracle(pairs)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-3, 1e3))
    def test_common_scale_preserves_order(self, c):
        q = planted_fusion_dataset(4, n_queries=1).queries[0]
        w = {"type0": 0.3, "type1": 1.7, "type2": 0.9, "type3": 2.2}
        a = collate(q, FusionModel(w))
        b = collate(q, FusionModel({k: c * v for k, v in w.items()}))
        assert a.doc_ids == b.doc_ids

    def test_normalized_model(self):
        q = two_shards()
        scaled = normalize_shard_scores(q).shard_scores
        assert scaled == {"a1": 1.0, "a2": 0.0, "b1": 1.0, "b2": 0.0}
        r = collate(q, FusionModel({"a": 1.0, "b": 2.0}, {"normalize_scores": True}))
        assert r.doc_ids[0] == "b1"


class TestTruncation:
    def test_keeps_top_per_type(self):
        kept = truncate_shards(two_shards(), 1)
        assert [d.doc_id for d in kept.documents] == ["a1", "b1"]
        assert set(kept.shard_scores) == {"a1", "b1"}

    @pytest.mark.parametrize("depth", [1, 3, 10, 50])
    def test_commutes_with_collation(self, depth):
        model = FusionModel({"type0": 0.3, "type1": 1.7, "type2": 0.9, "type3": 2.2})
        for q in planted_fusion_dataset(6, n_queries=4).queries:
            t = truncate_shards(q, depth)
            kept = {d.doc_id for d in t.documents}
            assert collate(t, model).doc_ids == tuple(d for d in collate(q, model).doc_ids if d in kept)


class TestPairwiseInit:
    def test_recovers_planted_order(self):
        data = planted_fusion_dataset(0, n_queries=100, planted_weights=(2.0, 1.0, 0.5))
        init = pairwise_linear_init(data.queries, data.record_types)
        assert kendall_tau(init.weights, (2.0, 1.0, 0.5)) == 1.0

    def test_identical_types_get_similar_weights(self):
        data = planted_fusion_dataset(0, n_queries=100, planted_weights=(1.0, 1.0, 1.0))
        w = pairwise_linear_init(data.queries, data.record_types).weights
        assert max(w) <= 1.1 * min(w)

    def test_subsample(self):
        data = planted_fusion_dataset(0, n_queries=50)
        init = pairwise_linear_init(data.queries, data.record_types, subsample_size=10, seed=3)
        assert len(init.qids) == 10
        assert init == pairwise_linear_init(data.queries, data.record_types, subsample_size=10, seed=3)

    def test_needs_pairs(self):
        q = QueryGroup("q", (Document("a1", TYPES["a"], {}, 1),), {"a1": 1.0})
        with pytest.raises(ValidationError):
            pairwise_linear_init([q], [TYPES["a"], TYPES["b"]])


class TestStochasticSearch:
    def test_improves_on_planted_data(self):
        data = planted_fusion_dataset(0, n_queries=100)
        model, report = stochastic_search(data.queries, data.record_types, SSConfig(k=20))
        obj = FusionObjective(data.queries, data.record_types, 20)
        assert report.final_objective >= report.initial_objective
        assert report.final_objective == pytest.approx(obj(obj.weights_of(model)))
        assert report.final_objective > obj(np.ones(4)) + 0.05
        assert model.metadata["algorithm"] == "ss"
        assert model.metadata["iterations"] == len(report.trace)

    def test_single_type(self):
        data = planted_fusion_dataset(0, n_queries=30, planted_weights=(1.0,))
        model, report = stochastic_search(data.queries, data.record_types, SSConfig(k=20))
        assert list(model.weights) == ["type0"]
        assert model.weights["type0"] > 0
        assert report.final_objective == pytest.approx(1.0)

    def test_calibrated_scores_stay_balanced(self):
        data = planted_fusion_dataset(0, n_queries=100, planted_weights=(1.0, 1.0, 1.0))
        model, report = stochastic_search(data.queries, data.record_types, SSConfig(k=20))
        w = list(model.weights.values())
        assert max(w) <= 1.1 * min(w)
        obj = FusionObjective(data.queries, data.record_types, 20)
        assert report.final_objective >= obj(np.ones(3)) - 1e-3

    def test_reproducible(self):
        data = planted_fusion_dataset(2, n_queries=40)
        a, ra = stochastic_search(data.queries, data.record_types, SSConfig(k=10, seed=5))
        b, rb = stochastic_search(data.queries, data.record_types, SSConfig(k=10, seed=5))
        assert a == b
        assert trace_rows(ra.trace) == trace_rows(rb.trace)

    def test_trace_rows(self):
        data = planted_fusion_dataset(2, n_queries=20)
        _, report = stochastic_search(data.queries, data.record_types, SSConfig(k=10))
        rows = trace_rows(report.trace)
        assert set(rows[0]) == {"iteration", "operation", "best_loss"}
        assert rows[-1]["best_loss"] == pytest.approx(-report.final_objective)

    def test_empty(self):
        with pytest.raises(ValueError):
            stochastic_search([], [TYPES["a"]])

    def test_normalized_training(self):
        data = planted_fusion_dataset(0, n_queries=30)
        model, _ = stochastic_search(data.queries, data.record_types, SSConfig(k=10, normalize_scores=True))
        assert model.metadata["normalize_scores"] is True


def test_coordinate_ascent_comparator():
    data = planted_fusion_dataset(0, n_queries=60)
    model, report = fusion_coordinate_ascent(data.queries, data.record_types)
    assert model.metadata["algorithm"] == "ca"
    assert report.final_objective >= report.initial_objective
    assert set(model.weights) == {"type0", "type1", "type2", "type3"}
