"""Global-search fusion: one weight per record type, tuned on NDCG@k.

Every candidate's final score is ``w[type] * shard_score``.  Weights are
seeded by a small pairwise hinge-loss ranker and then refined by
Nelder-Mead directly on mean NDCG@k (:func:`stochastic_search`).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .coordinate_ascent import CAConfig, TrainReport, coordinate_ascent, init_weights_uniform
from .core import Document, FusionModel, QueryGroup, Ranking, RecordType, ValidationError, rank_by_score
from .objective import FusionObjective
from .simplex import SSConfig, TraceEntry, nelder_mead

log = logging.getLogger(__name__)

PAIRWISE_EPOCHS = 20
PAIRWISE_LR = 0.1
PAIRWISE_L2 = 1e-4


@dataclass(frozen=True)
class PairwiseInitModel:
    weights: tuple[float, ...]
    qids: tuple[str, ...]
    loss_trace: tuple[float, ...] = field(default=())


def _shard_score(query: QueryGroup, doc: Document) -> float:
    if not query.shard_scores or doc.doc_id not in query.shard_scores:
        raise ValidationError(f"query {query.qid!r}: document {doc.doc_id!r} has no shard score")
    return query.shard_scores[doc.doc_id]


def fusion_features(query: QueryGroup, record_types: Sequence[RecordType]) -> list[dict[int, float]]:
    """One-hot-scaled vectors: a type-``j`` document maps to ``{j: shard_score}``."""
    position = {t.name: i for i, t in enumerate(record_types)}
    out = []
    for d in query.documents:
        if d.record_type is None or d.record_type.name not in position:
            raise ValidationError(f"query {query.qid!r}: document {d.doc_id!r} has an unknown record type")
        out.append({position[d.record_type.name]: _shard_score(query, d)})
    return out


def _feature_matrix(query: QueryGroup, record_types: Sequence[RecordType]) -> np.ndarray:
    x = np.zeros((len(query.documents), len(record_types)))
    for row, vec in enumerate(fusion_features(query, record_types)):
        for j, v in vec.items():
            x[row, j] = v
    return x


def normalize_shard_scores(query: QueryGroup) -> QueryGroup:
    """Min-max scale shard scores within each record type's list."""
    by_type: dict[str, list[float]] = {}
    for d in query.documents:
        by_type.setdefault(d.record_type.name, []).append(_shard_score(query, d))
    bounds = {t: (min(v), max(v)) for t, v in by_type.items()}
    scaled = {}
    for d in query.documents:
        lo, hi = bounds[d.record_type.name]
        s = query.shard_scores[d.doc_id]
        scaled[d.doc_id] = (s - lo) / (hi - lo) if hi > lo else 1.0
    return replace(query, shard_scores=scaled)


def truncate_shards(query: QueryGroup, depth: int) -> QueryGroup:
    """Keep the ``depth`` best-scored documents of every record type."""
    per_type: dict[str, list[Document]] = {}
    for d in query.documents:
        per_type.setdefault(d.record_type.name, []).append(d)
    allowed = set()
    for docs in per_type.values():
        ranked = rank_by_score((d.doc_id, _shard_score(query, d)) for d in docs)
        allowed.update(ranked.doc_ids[:depth])
    kept = [d for d in query.documents if d.doc_id in allowed]
    return replace(
        query,
        documents=tuple(kept),
        shard_scores={d.doc_id: query.shard_scores[d.doc_id] for d in kept},
    )


def collate(query: QueryGroup, model: FusionModel) -> Ranking:
    """Merge the per-type lists into one ranking by ``w[type] * shard_score``."""
    if model.metadata.get("normalize_scores"):
        query = normalize_shard_scores(query)
    scored = []
    for d in query.documents:
        if d.record_type is None:
            raise ValidationError(f"query {query.qid!r}: document {d.doc_id!r} has no record type")
        scored.append((d.doc_id, model.weight_of(d.record_type) * _shard_score(query, d)))
    return rank_by_score(scored)


def _subsample(queries: Sequence[QueryGroup], size: int, rng: np.random.Generator) -> list[QueryGroup]:
    if size >= len(queries):
        return list(queries)
    picked = np.sort(rng.choice(len(queries), size=size, replace=False))
    return [queries[i] for i in picked]


def pairwise_linear_init(
    queries: Sequence[QueryGroup],
    record_types: Sequence[RecordType],
    subsample_size: int = 1000,
    seed: int = 0,
) -> PairwiseInitModel:
    """Linear pairwise hinge ranker on fusion features of a query subsample.

    Minimizes ``mean max(0, 1 - w . (x_pos - x_neg)) + l2 |w|^2 / 2`` by
    subgradient steps, one step per query (averaged over its pairs), with
    step size ``0.1 / sqrt(t)`` over 20 shuffled epochs.

    Raises:
        ValidationError: if no query has both a relevant and an irrelevant document.
    """
    rng = np.random.default_rng(seed)
    sample = _subsample(queries, subsample_size, rng)
    blocks = []
    for q in sample:
        x = _feature_matrix(q, record_types)
        labels = np.array([d.label for d in q.documents])
        pos, neg = x[labels > 0], x[labels <= 0]
        if len(pos) and len(neg):
            blocks.append((pos[:, None, :] - neg[None, :, :]).reshape(-1, x.shape[1]))
    if not blocks:
        raise ValidationError("pairwise initializer found no (relevant, irrelevant) pairs")

    w = np.zeros(len(record_types))
    t = 0
    losses = []
    for _ in range(PAIRWISE_EPOCHS):
        for b in rng.permutation(len(blocks)):
            diffs = blocks[b]
            t += 1
            active = diffs @ w < 1.0
            grad = PAIRWISE_L2 * w - diffs[active].sum(axis=0) / len(diffs)
            w -= PAIRWISE_LR / np.sqrt(t) * grad
        hinge = np.mean([np.maximum(0.0, 1.0 - d @ w).mean() for d in blocks])
        losses.append(float(hinge + 0.5 * PAIRWISE_L2 * w @ w))
    return PairwiseInitModel(tuple(float(v) for v in w), tuple(q.qid for q in sample), tuple(losses))


def _prepare(queries: Sequence[QueryGroup], normalize: bool) -> list[QueryGroup]:
    if not queries:
        raise ValueError("fusion training needs a non-empty dataset")
    return [normalize_shard_scores(q) for q in queries] if normalize else list(queries)


def stochastic_search(
    queries: Sequence[QueryGroup],
    record_types: Sequence[RecordType],
    config: SSConfig = SSConfig(),
) -> tuple[FusionModel, TrainReport]:
    """Learn fusion weights by Nelder-Mead on ``-mean NDCG@k``, seeded pairwise."""
    started = time.perf_counter()
    queries = _prepare(queries, config.normalize_scores)
    objective = FusionObjective(queries, record_types, config.k)
    init = pairwise_linear_init(queries, record_types, config.init_subsample, config.seed)
    v0 = np.array(init.weights)
    initial = objective(v0)

    w, trace = nelder_mead(lambda v: -objective(v), v0, config)
    final = objective(w)
    log.info("stochastic search: ndcg@%d %.6f -> %.6f in %d iterations", config.k, initial, final, len(trace))
    model = FusionModel(
        {t.name: float(x) for t, x in zip(record_types, w)},
        {
            "objective": f"ndcg@{config.k}",
            "algorithm": "ss",
            "seed": config.seed,
            "iterations": len(trace),
            "normalize_scores": config.normalize_scores,
            "initializer": {
                "kind": "pairwise_hinge",
                "weights": list(init.weights),
                "subsample": len(init.qids),
                "final_loss": init.loss_trace[-1],
            },
        },
    )
    report = TrainReport(
        initial_objective=initial,
        final_objective=final,
        sweeps=len(trace),
        wall_time=time.perf_counter() - started,
        trajectory=[initial] + [-e.best_loss for e in trace],
        trace=trace,
    )
    return model, report


def fusion_coordinate_ascent(
    queries: Sequence[QueryGroup],
    record_types: Sequence[RecordType],
    config: CAConfig = CAConfig(),
    normalize: bool = False,
) -> tuple[FusionModel, TrainReport]:
    """Coordinate ascent over fusion features, as an in-repo comparator to SS."""
    queries = _prepare(queries, normalize)
    feature_queries = [
        replace(q, documents=tuple(replace(d, features=f) for d, f in zip(q.documents, fusion_features(q, record_types))))
        for q in queries
    ]
    linear, report = coordinate_ascent(feature_queries, init_weights_uniform(len(record_types)), config)
    model = FusionModel(
        {t.name: w for t, w in zip(record_types, linear.weights)},
        {
            "objective": f"ndcg@{config.k}",
            "algorithm": "ca",
            "seed": config.seed,
            "sweeps": report.sweeps,
            "normalize_scores": normalize,
        },
    )
    return model, report


def trace_rows(trace: Sequence[TraceEntry]) -> list[dict]:
    return [{"iteration": e.iteration, "operation": e.operation, "best_loss": e.best_loss} for e in trace]
