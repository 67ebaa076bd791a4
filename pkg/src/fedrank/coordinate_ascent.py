"""Linear record-type ranker trained by coordinate ascent on mean NDCG@k.

Two initializers are provided: the uniform ``1 / num_features`` start, and
a label-informed start for binary features where each weight is the share
of a feature's firings that land in relevant documents.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import LinearModel, QueryGroup, ValidationError, feature_dimension
from .objective import LinearObjective

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureStats:
    fre_rel: tuple[int, ...]
    fre_irrel: tuple[int, ...]

    @property
    def num_features(self) -> int:
        return len(self.fre_rel)


@dataclass(frozen=True)
class CAConfig:
    k: int = 10
    step: float = 0.05
    max_doublings: int = 4
    max_sweeps: int = 25
    tolerance: float = 1e-5
    restarts: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def candidate_deltas(self) -> list[float]:
        steps = [self.step * 2**t for t in range(self.max_doublings + 1)]
        return [s for step in steps for s in (step, -step)]


@dataclass
class TrainReport:
    initial_objective: float
    final_objective: float
    sweeps: int
    wall_time: float
    trajectory: list[float] = field(default_factory=list)
    trace: list = field(default_factory=list)


def feature_stats(queries: Sequence[QueryGroup], num_features: int | None = None) -> FeatureStats:
    """Count how often each feature is 1 in relevant and in irrelevant documents.

    Raises:
        ValidationError: on a feature value other than 0 or 1.
    """
    dim = feature_dimension(queries) if num_features is None else num_features
    rel = [0] * dim
    irrel = [0] * dim
    for q in queries:
        for d in q.documents:
            for i, v in d.features.items():
                if v not in (0, 1):
                    raise ValidationError(
                        f"query {q.qid!r}, document {d.doc_id!r}: non-binary feature value {v!r} at index {i}"
                    )
                if v == 1 and i < dim:
                    if d.label:
                        rel[i] += 1
                    else:
                        irrel[i] += 1
    return FeatureStats(tuple(rel), tuple(irrel))


def init_weights_customized(stats: FeatureStats) -> LinearModel:
    weights = tuple(
        0.5 if r + i == 0 else r / (r + i) for r, i in zip(stats.fre_rel, stats.fre_irrel)
    )
    return LinearModel(weights, {"init": "customized"})


def init_weights_uniform(num_features: int) -> LinearModel:
    if num_features < 1:
        raise ValueError("num_features must be >= 1")
    return LinearModel((1.0 / num_features,) * num_features, {"init": "uniform"})


def _ascend(objective: LinearObjective, w: np.ndarray, config: CAConfig) -> tuple[np.ndarray, list[float], int]:
    scores = objective.scores(w)
    current = objective.mean(scores)
    trajectory = [current]
    sweeps = 0
    deltas = config.candidate_deltas
    while sweeps < config.max_sweeps:
        sweeps += 1
        sweep_start = current
        for i in range(objective.dimension):
            column = objective.features[:, i]
            if not column.any():
                continue
            best_delta, best_value = 0.0, current
            for delta in deltas:
                value = objective.mean(scores + delta * column)
                if value > best_value:
                    best_delta, best_value = delta, value
            if best_delta:
                w[i] += best_delta
                scores = objective.scores(w)
                current = best_value
                trajectory.append(current)
        if current - sweep_start < config.tolerance:
            break
    return w, trajectory, sweeps


def coordinate_ascent(
    queries: Sequence[QueryGroup],
    init: LinearModel,
    config: CAConfig = CAConfig(),
) -> tuple[LinearModel, TrainReport]:
    """Greedy coordinate ascent on mean NDCG@k.

    Each sweep visits features in index order and tries ``w_i +/- step * 2**t``
    for ``t = 0..max_doublings``, keeping the best strictly improving move.
    Training stops once a sweep gains less than ``tolerance`` or after
    ``max_sweeps``.  Restarts beyond the first start from the initial
    weights plus seeded Gaussian noise; the best run is kept.
    """
    if not queries:
        raise ValueError("coordinate ascent needs a non-empty dataset")
    started = time.perf_counter()
    objective = LinearObjective(queries, init.dimension, config.k)
    w0 = init.as_array()
    rng = np.random.default_rng(config.seed)

    best_w, best_traj, total_sweeps = None, None, 0
    for restart in range(config.restarts):
        start = w0.copy()
        if restart:
            start += rng.normal(scale=config.step * 2**config.max_doublings, size=start.shape)
        w, traj, sweeps = _ascend(objective, start, config)
        total_sweeps += sweeps
        log.debug("restart %d: %d sweeps, ndcg@%d %.6f", restart, sweeps, config.k, traj[-1])
        if best_traj is None or traj[-1] > best_traj[-1]:
            best_w, best_traj = w, traj

    initial = objective(w0)
    model = LinearModel(
        tuple(float(x) for x in best_w),
        {
            "objective": f"ndcg@{config.k}",
            "seed": config.seed,
            "sweeps": total_sweeps,
            "init": init.metadata.get("init", "given"),
        },
    )
    report = TrainReport(initial, best_traj[-1], total_sweeps, time.perf_counter() - started, best_traj)
    return model, report
