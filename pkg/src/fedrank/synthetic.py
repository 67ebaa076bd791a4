"""Seeded synthetic datasets for exercising the trainers."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Dataset, Document, QueryGroup, index_record_types


def binary_ltr_dataset(
    seed: int,
    n_queries: int = 100,
    n_features: int = 30,
    docs_per_query: int = 20,
    n_signature: int = 5,
) -> Dataset:
    """Record-search data with binary match features.

    The first ``n_signature`` features fire only in relevant documents.  The
    others fire with independent random rates in relevant and irrelevant
    documents, so each may help, hurt or do nothing.
    """
    if n_signature > n_features:
        raise ValueError("n_signature exceeds n_features")
    rng = np.random.default_rng(seed)
    p_rel = np.empty(n_features)
    p_irrel = np.empty(n_features)
    p_rel[:n_signature] = rng.uniform(0.2, 0.5, n_signature)
    p_irrel[:n_signature] = 0.0
    n_rest = n_features - n_signature
    p_rel[n_signature:] = rng.uniform(0.05, 0.8, n_rest)
    p_irrel[n_signature:] = rng.uniform(0.05, 0.8, n_rest)

    queries = []
    for q in range(n_queries):
        n_rel = int(rng.integers(1, 5))
        labels = np.zeros(docs_per_query, dtype=int)
        labels[rng.choice(docs_per_query, n_rel, replace=False)] = 1
        docs = []
        for i, y in enumerate(labels):
            probs = p_rel if y else p_irrel
            fired = np.flatnonzero(rng.random(n_features) < probs)
            docs.append(Document(f"q{q}d{i}", None, {int(f): 1.0 for f in fired}, int(y)))
        queries.append(QueryGroup(f"q{q}", tuple(docs)))
    return Dataset(tuple(queries))


def planted_fusion_dataset(
    seed: int,
    n_queries: int = 200,
    planted_weights: Sequence[float] = (2.0, 1.0, 0.5, 0.25),
    docs_per_shard: int = 25,
    noise: float = 0.0,
    max_relevant: int = 5,
    qid_prefix: str = "q",
) -> Dataset:
    """Global-search data whose ideal fusion weights are ``planted_weights``.

    Each document gets a latent utility; its shard score is that utility
    divided by its record type's planted weight, so ``w_j * s`` recovers the
    utility.  The top documents by utility (plus optional Gaussian label
    noise) are relevant.  Shard lists may be shorter than
    ``docs_per_shard``.
    """
    rng = np.random.default_rng(seed)
    weights = np.asarray(planted_weights, dtype=float)
    names = [f"type{j}" for j in range(weights.size)]
    types = index_record_types(names)
    queries = []
    for q in range(n_queries):
        docs, scores, utility = [], {}, []
        for j, name in enumerate(names):
            depth = int(rng.integers(max(1, docs_per_shard // 2), docs_per_shard + 1))
            u = rng.normal(size=depth) + 3.0
            for i, value in enumerate(u):
                doc_id = f"{qid_prefix}{q}-{name}-{i}"
                docs.append((doc_id, name))
                scores[doc_id] = float(value / weights[j])
                utility.append(value + noise * rng.normal())
        n_rel = int(rng.integers(1, max_relevant + 1))
        relevant = set(np.argsort(-np.asarray(utility), kind="stable")[:n_rel].tolist())
        documents = tuple(
            Document(doc_id, types[name], {}, int(i in relevant)) for i, (doc_id, name) in enumerate(docs)
        )
        queries.append(QueryGroup(f"{qid_prefix}{q}", documents, scores))
    return Dataset(tuple(queries), tuple(types[n] for n in sorted(types)))
