"""Vectorized mean NDCG@k over a whole dataset, for use inside trainers.

Documents of all queries are laid out contiguously in one flat array.
Each evaluation does a single stable ``lexsort`` keyed on (query, -score),
which reproduces :func:`fedrank.core.rank_by_score` tie-breaking exactly.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import FusionModel, QueryGroup, RecordType, ValidationError


class NdcgObjective:
    def __init__(self, group_sizes: Sequence[int], labels: np.ndarray, k: int):
        if k < 1:
            raise ValueError("cutoff k must be >= 1")
        sizes = np.asarray(group_sizes, dtype=np.int64)
        if sizes.size == 0 or np.any(sizes < 1):
            raise ValueError("objective needs at least one non-empty query")
        self.k = k
        self.sizes = sizes
        self.starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        self.labels = np.asarray(labels, dtype=float)
        self.query_of = np.repeat(np.arange(sizes.size), sizes)
        self.rank = np.arange(self.labels.size) - self.starts[self.query_of]
        self.discount = np.zeros(self.labels.size)
        in_cut = self.rank < k
        self.discount[in_cut] = 1.0 / np.log2(self.rank[in_cut] + 2.0)
        ideal = np.empty(sizes.size)
        for q, (a, n) in enumerate(zip(self.starts, sizes)):
            gains = np.sort(self.labels[a : a + n])[::-1][:k]
            ideal[q] = float(gains @ (1.0 / np.log2(np.arange(gains.size) + 2.0)))
        self.idcg = ideal
        self.valid = ideal > 0

    @property
    def num_queries(self) -> int:
        return int(self.sizes.size)

    def per_query(self, scores: np.ndarray) -> np.ndarray:
        """NDCG@k for every query; 0 where the query has no relevant document."""
        scores = np.asarray(scores, dtype=float)
        order = np.lexsort((-scores, self.query_of))
        gains = self.labels[order] * self.discount
        dcg = np.add.reduceat(gains, self.starts)
        out = np.zeros_like(dcg)
        out[self.valid] = dcg[self.valid] / self.idcg[self.valid]
        return out

    def mean(self, scores: np.ndarray) -> float:
        if not self.valid.any():
            return 0.0
        return float(np.mean(self.per_query(scores)[self.valid]))


class LinearObjective(NdcgObjective):
    """Mean NDCG@k of ``features @ w`` over record-search queries."""

    def __init__(self, queries: Sequence[QueryGroup], dimension: int, k: int):
        docs = [d for q in queries for d in q.documents]
        x = np.zeros((len(docs), dimension))
        for row, d in enumerate(docs):
            for i, v in d.features.items():
                if i < dimension:
                    x[row, i] = v
        super().__init__([len(q.documents) for q in queries], np.array([d.label for d in docs]), k)
        self.features = x
        self.dimension = dimension

    def scores(self, weights: np.ndarray) -> np.ndarray:
        return self.features @ np.asarray(weights, dtype=float)

    def __call__(self, weights: np.ndarray) -> float:
        return self.mean(self.scores(weights))


class FusionObjective(NdcgObjective):
    """Mean NDCG@k of ``w[type(d)] * shard_score(d)`` over global-search queries."""

    def __init__(self, queries: Sequence[QueryGroup], record_types: Sequence[RecordType], k: int):
        position = {t.name: i for i, t in enumerate(record_types)}
        type_idx, shard, labels = [], [], []
        for q in queries:
            for d in q.documents:
                if d.record_type is None or d.record_type.name not in position:
                    raise ValidationError(f"query {q.qid!r}: document {d.doc_id!r} has an unknown record type")
                if not q.shard_scores or d.doc_id not in q.shard_scores:
                    raise ValidationError(f"query {q.qid!r}: document {d.doc_id!r} has no shard score")
                type_idx.append(position[d.record_type.name])
                shard.append(q.shard_scores[d.doc_id])
                labels.append(d.label)
        super().__init__([len(q.documents) for q in queries], np.array(labels), k)
        self.record_types = tuple(record_types)
        self.type_idx = np.array(type_idx, dtype=np.int64)
        self.shard = np.array(shard, dtype=float)

    def scores(self, weights: np.ndarray) -> np.ndarray:
        return np.asarray(weights, dtype=float)[self.type_idx] * self.shard

    def __call__(self, weights: np.ndarray) -> float:
        return self.mean(self.scores(weights))

    def weights_of(self, model: FusionModel) -> np.ndarray:
        return np.array([model.weight_of(t) for t in self.record_types])
