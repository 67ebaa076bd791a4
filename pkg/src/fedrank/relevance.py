"""NDCG family and S-recall.

Gains are linear in the label (``y / log2(1 + i)``), not exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from .core import Ranking, RecordType


@dataclass(frozen=True)
class MetricValue:
    name: str
    value: float
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("cutoff k must be >= 1")
        if not 0.0 <= self.value <= 1.0 + 1e-12:
            raise ValueError(f"{self.name}: value {self.value} outside [0, 1]")


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f"cutoff k must be >= 1, got {k}")


def dcg_of_gains(gains: Iterable[float], k: int) -> float:
    _check_k(k)
    total = 0.0
    for i, y in enumerate(gains, start=1):
        if i > k:
            break
        total += y / math.log2(1 + i)
    return total


def dcg_at_k(ranking: Ranking, labels: Mapping[str, int], k: int) -> float:
    return dcg_of_gains((labels.get(d, 0) for d in ranking.doc_ids), k)


def idcg_at_k(labels: Iterable[int], k: int) -> float:
    return dcg_of_gains(sorted(labels, reverse=True), k)


def ndcg_at_k(ranking: Ranking, labels: Mapping[str, int], k: int) -> MetricValue:
    """DCG@k over IDCG@k; defined as 0 when the query has no relevant document."""
    ideal = idcg_at_k(labels.values(), k)
    value = dcg_at_k(ranking, labels, k) / ideal if ideal > 0 else 0.0
    return MetricValue(f"ndcg@{k}", min(value, 1.0), k)


def mean_ndcg_at_k(dataset: Sequence[tuple[Ranking, Mapping[str, int]]], k: int) -> float:
    """Mean NDCG@k over queries that have at least one relevant document.

    Raises:
        ValueError: on an empty dataset.
    """
    if not dataset:
        raise ValueError("mean NDCG of an empty dataset is undefined")
    values = [
        ndcg_at_k(ranking, labels, k).value
        for ranking, labels in dataset
        if idcg_at_k(labels.values(), k) > 0
    ]
    return math.fsum(values) / len(values) if values else 0.0


def s_recall_at_k(
    ranking: Ranking,
    type_of: Mapping[str, Hashable],
    num_types: int,
    k: int,
) -> MetricValue:
    """Fraction of ``num_types`` record types that appear in the top ``k``."""
    if num_types < 1:
        raise ValueError("number of record types must be >= 1")
    _check_k(k)
    seen = {_type_name(type_of[d]) for d in ranking.doc_ids[:k]}
    if len(seen) > num_types:
        raise ValueError(f"{len(seen)} record types present but universe size is {num_types}")
    return MetricValue(f"srecall@{k}", len(seen) / num_types, k)


def _type_name(t: Hashable) -> Hashable:
    return t.name if isinstance(t, RecordType) else t
