"""Federated learning-to-rank: record-type rankers, fusion weights and diversity metrics."""

from .coordinate_ascent import (
    CAConfig,
    FeatureStats,
    TrainReport,
    coordinate_ascent,
    feature_stats,
    init_weights_customized,
    init_weights_uniform,
)
from .core import (
    Dataset,
    Document,
    FusionModel,
    LinearModel,
    QueryGroup,
    Ranking,
    RecordType,
    ValidationError,
    rank_by_score,
    score_linear,
)
from .diversity import DiversityProfile, TypeCounts, cumulative_entropy, diversity_profile, entropy, nce_at_k
from .fusion import collate, fusion_features, pairwise_linear_init, stochastic_search
from .maxent import (
    CountAllocation,
    branch_and_bound_maxent,
    closed_form_allocation,
    ideal_cumulative_entropy,
    relaxation_optimum,
    verify_closed_form,
)
from .relevance import MetricValue, dcg_at_k, idcg_at_k, mean_ndcg_at_k, ndcg_at_k, s_recall_at_k
from .simplex import SSConfig, nelder_mead

__version__ = "0.1.0"

__all__ = [
    "branch_and_bound_maxent",
    "CAConfig",
    "closed_form_allocation",
    "collate",
    "coordinate_ascent",
    "CountAllocation",
    "cumulative_entropy",
    "Dataset",
    "dcg_at_k",
    "diversity_profile",
    "DiversityProfile",
    "Document",
    "entropy",
    "feature_stats",
    "FeatureStats",
    "fusion_features",
    "FusionModel",
    "idcg_at_k",
    "ideal_cumulative_entropy",
    "init_weights_customized",
    "init_weights_uniform",
    "LinearModel",
    "mean_ndcg_at_k",
    "MetricValue",
    "nce_at_k",
    "ndcg_at_k",
    "nelder_mead",
    "pairwise_linear_init",
    "QueryGroup",
    "rank_by_score",
    "Ranking",
    "RecordType",
    "relaxation_optimum",
    "s_recall_at_k",
    "score_linear",
    "SSConfig",
    "stochastic_search",
    "TrainReport",
    "TypeCounts",
    "ValidationError",
    "verify_closed_form",
]
