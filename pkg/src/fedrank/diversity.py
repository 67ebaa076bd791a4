"""Record-type diversity: prefix entropy, cumulative entropy and NCE.

NCE@k divides the cumulative entropy of the top ``k`` results by the best
cumulative entropy any list of that length could reach with ``K`` types,
so lists of different lengths and type universes are comparable.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .core import RecordType
from .maxent import entropy_of_counts, ideal_cumulative_entropy
from .relevance import MetricValue


@dataclass(frozen=True)
class TypeCounts:
    counts: Mapping[Hashable, int]
    total: int

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("type counts must be non-negative")
        if sum(self.counts.values()) != self.total:
            raise ValueError("type counts do not sum to total")

    @classmethod
    def of(cls, types: Sequence[Hashable]) -> "TypeCounts":
        counts = Counter(_key(t) for t in types)
        return cls(dict(counts), sum(counts.values()))


@dataclass(frozen=True)
class DiversityProfile:
    prefix_entropies: tuple[float, ...]
    cumulative: float
    nce: float


def _key(t: Hashable) -> Hashable:
    return t.name if isinstance(t, RecordType) else t


def entropy(counts: TypeCounts | Mapping[Hashable, int]) -> float:
    """Shannon entropy in bits of a record-type count table."""
    if not isinstance(counts, TypeCounts):
        counts = TypeCounts(dict(counts), sum(counts.values()))
    if counts.total < 1:
        raise ValueError("entropy of an empty list is undefined")
    return entropy_of_counts(list(counts.counts.values()))


def prefix_entropies(types: Sequence[Hashable]) -> list[float]:
    """Entropy of every prefix, updated incrementally in one pass.

    Uses ``H_p = log2(p) - S_p / p`` with ``S_p = sum_i n_i log2(n_i)``.
    """
    counts: dict[Hashable, int] = {}
    s = 0.0
    out = []
    for p, t in enumerate(types, start=1):
        key = _key(t)
        c = counts.get(key, 0)
        counts[key] = c + 1
        s += (c + 1) * math.log2(c + 1) - (c * math.log2(c) if c else 0.0)
        if len(counts) == 1:
            out.append(0.0)
        else:
            out.append(max(math.log2(p) - s / p, 0.0))
    return out


def cumulative_entropy(types: Sequence[Hashable]) -> float:
    if not types:
        raise ValueError("cumulative entropy of an empty list is undefined")
    return math.fsum(prefix_entropies(types))


def _check_universe(types: Sequence[Hashable], num_types: int) -> None:
    if num_types < 1:
        raise ValueError("number of record types must be >= 1")
    present = len({_key(t) for t in types})
    if present > num_types:
        raise ValueError(f"{present} record types present but universe size is {num_types}")


def nce_at_k(types: Sequence[Hashable], num_types: int, k: int) -> MetricValue:
    """Normalized cumulative entropy of the top ``k`` items.

    Returns 1 when the ideal is 0 (a single-type universe).
    """
    if k < 1:
        raise ValueError(f"cutoff k must be >= 1, got {k}")
    if not types:
        raise ValueError("NCE of an empty list is undefined")
    top = list(types[:k])
    _check_universe(top, num_types)
    ideal = ideal_cumulative_entropy(num_types, len(top))
    if ideal <= 0.0:
        return MetricValue(f"nce@{k}", 1.0, k)
    value = cumulative_entropy(top) / ideal
    return MetricValue(f"nce@{k}", min(value, 1.0), k)


def diversity_profile(types: Sequence[Hashable], num_types: int) -> DiversityProfile:
    if not types:
        raise ValueError("diversity profile of an empty list is undefined")
    prefixes = prefix_entropies(types)
    return DiversityProfile(
        prefix_entropies=tuple(prefixes),
        cumulative=math.fsum(prefixes),
        nce=nce_at_k(types, num_types, len(types)).value,
    )
