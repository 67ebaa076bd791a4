"""Domain types and the ranking primitive shared by trainers and metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class ValidationError(ValueError):
    """Rejected input: malformed data, bad labels, non-finite scores."""


@dataclass(frozen=True, order=True)
class RecordType:
    name: str
    index: int = field(compare=False, default=-1)


def index_record_types(names: Iterable[str]) -> dict[str, RecordType]:
    """Assign stable indices to record-type names, sorted lexicographically."""
    return {name: RecordType(name, i) for i, name in enumerate(sorted(set(names)))}


@dataclass(frozen=True)
class Document:
    doc_id: str
    record_type: RecordType | None
    features: Mapping[int, float]
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValidationError(f"document {self.doc_id!r}: label must be 0 or 1, got {self.label!r}")
        if any(i < 0 for i in self.features):
            raise ValidationError(f"document {self.doc_id!r}: negative feature index")


@dataclass(frozen=True)
class QueryGroup:
    qid: str
    documents: tuple[Document, ...]
    shard_scores: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if not self.qid:
            raise ValidationError("query id must be non-empty")
        if not self.documents:
            raise ValidationError(f"query {self.qid!r} has no documents")

    @property
    def labels(self) -> dict[str, int]:
        return {d.doc_id: d.label for d in self.documents}

    @property
    def has_positive(self) -> bool:
        return any(d.label > 0 for d in self.documents)


@dataclass(frozen=True)
class LinearModel:
    """Dense weight vector over feature indices."""

    weights: tuple[float, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not all(math.isfinite(w) for w in self.weights):
            raise ValidationError("linear model weights must be finite")

    @property
    def dimension(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class FusionModel:
    """One collation weight per record type, keyed by type name."""

    weights: Mapping[str, float]
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not all(math.isfinite(w) for w in self.weights.values()):
            raise ValidationError("fusion model weights must be finite")

    def weight_of(self, record_type: RecordType | str) -> float:
        name = record_type if isinstance(record_type, str) else record_type.name
        try:
            return self.weights[name]
        except KeyError:
            raise ValidationError(f"record type {name!r} is not covered by the fusion model") from None


@dataclass(frozen=True)
class Ranking:
    doc_ids: tuple[str, ...]
    scores: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.doc_ids)

    def __iter__(self):
        return iter(zip(self.doc_ids, self.scores))


def rank_by_score(docs: Iterable[tuple[str, float]]) -> Ranking:
    """Sort ``(doc_id, score)`` pairs by descending score.

    The sort is stable, so equal scores keep their input order.

    Raises:
        ValidationError: if any score is NaN or infinite.
    """
    pairs = list(docs)
    for doc_id, score in pairs:
        if not math.isfinite(score):
            raise ValidationError(f"non-finite score {score!r} for document {doc_id!r}")
    pairs.sort(key=lambda p: -p[1])
    return Ranking(tuple(d for d, _ in pairs), tuple(float(s) for _, s in pairs))


def score_linear(model: LinearModel, doc: Document) -> float:
    # indices beyond the model's dimension carry weight 0
    w = model.weights
    return float(sum(w[i] * x for i, x in doc.features.items() if i < len(w)))


def rank_query_linear(model: LinearModel, query: QueryGroup) -> Ranking:
    return rank_by_score((d.doc_id, score_linear(model, d)) for d in query.documents)


def feature_dimension(queries: Sequence[QueryGroup]) -> int:
    top = -1
    for q in queries:
        for d in q.documents:
            if d.features:
                top = max(top, max(d.features))
    return top + 1


@dataclass(frozen=True)
class Dataset:
    """Queries plus the record-type universe they were parsed with."""

    queries: tuple[QueryGroup, ...]
    record_types: tuple[RecordType, ...] = ()

    def __len__(self) -> int:
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)

    @classmethod
    def from_queries(cls, queries: Iterable[QueryGroup]) -> "Dataset":
        queries = tuple(queries)
        types = {d.record_type for q in queries for d in q.documents if d.record_type is not None}
        return cls(queries, tuple(sorted(types, key=lambda t: t.index)))
