"""Integer-constrained maximum entropy over record-type counts.

For ``K`` record types and ``n`` positions the problem is

    max  -sum_i (n_i / n) log2(n_i / n)   s.t.  sum_i n_i = n,  n_i in {0..n}

The balanced allocation (every count is ``n // K`` or ``n // K + 1``) is the
optimum.  :func:`branch_and_bound_maxent` re-derives it by searching the
probability grid ``{0, 1/n, ..., 1}`` with relaxation bounds, and
:func:`verify_closed_form` cross-checks the two against exhaustive enumeration.

All solver state is integral (counts, not probabilities) so that grid
membership tests are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Mapping, Sequence

TOL = 1e-12


def entropy_of_counts(counts: Sequence[int]) -> float:
    """Shannon entropy (bits) of the distribution ``counts / sum(counts)``."""
    n = sum(counts)
    if n <= 0:
        raise ValueError("entropy needs at least one document")
    h = 0.0
    for c in counts:
        if c < 0:
            raise ValueError("counts must be non-negative")
        if c:
            p = c / n
            h -= p * math.log2(p)
    return max(h, 0.0)


def entropy_of_probabilities(probs: Sequence[float]) -> float:
    return max(0.0, -sum(p * math.log2(p) for p in probs if p > 0))


@dataclass(frozen=True)
class MaxEntProblem:
    K: int
    n: int

    def __post_init__(self) -> None:
        if self.K < 1 or self.n < 1:
            raise ValueError(f"need K >= 1 and n >= 1, got K={self.K}, n={self.n}")


@dataclass(frozen=True)
class CountAllocation:
    counts: tuple[int, ...]
    entropy: float

    @classmethod
    def of(cls, counts: Sequence[int]) -> "CountAllocation":
        counts = tuple(int(c) for c in counts)
        return cls(counts, entropy_of_counts(counts))

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def probabilities(self) -> tuple[float, ...]:
        n = self.n
        return tuple(c / n for c in self.counts)


def closed_form_allocation(K: int, n: int) -> CountAllocation:
    """Balanced allocation: ``K - n % K`` types get ``n // K``, the rest one more."""
    MaxEntProblem(K, n)
    q, r = divmod(n, K)
    return CountAllocation.of([q] * (K - r) + [q + 1] * r)


@lru_cache(maxsize=None)
def _ideal_prefix_entropies(K: int, n: int) -> tuple[float, ...]:
    return tuple(closed_form_allocation(K, p).entropy for p in range(1, n + 1))


def ideal_prefix_entropies(K: int, n: int) -> tuple[float, ...]:
    MaxEntProblem(K, n)
    return _ideal_prefix_entropies(K, n)


def ideal_cumulative_entropy(K: int, n: int) -> float:
    """Sum over prefix lengths ``1..n`` of the maximum attainable entropy."""
    return math.fsum(ideal_prefix_entropies(K, n))


def relaxation_optimum(fixed: Sequence[float], K: int) -> tuple[tuple[float, ...], float]:
    """Continuous max-entropy distribution with the leading coordinates fixed.

    The free coordinates share the residual probability mass equally.

    Raises:
        ValueError: if the fixed mass exceeds 1 or nothing is left free.
    """
    fixed = [float(p) for p in fixed]
    free = K - len(fixed)
    if free < 1:
        raise ValueError("relaxation needs at least one free coordinate")
    if any(p < 0 for p in fixed):
        raise ValueError("fixed probabilities must be non-negative")
    residual = 1.0 - math.fsum(fixed)
    if residual < -TOL:
        raise ValueError(f"infeasible: fixed probabilities sum to {1.0 - residual:.6g} > 1")
    residual = max(residual, 0.0)
    probs = tuple(fixed) + (residual / free,) * free
    return probs, entropy_of_probabilities(probs)


def _relaxation_counts(fixed: Sequence[int], K: int, n: int) -> tuple[tuple[float, ...], float, tuple[int, ...] | None]:
    """Relaxation on the count scale; third item is the integral solution if the optimum is on the grid."""
    free = K - len(fixed)
    residual = n - sum(fixed)
    share = residual / free
    probs = tuple(c / n for c in fixed) + (share / n,) * free
    integral = None
    if residual % free == 0:
        integral = tuple(fixed) + (residual // free,) * free
    return probs, entropy_of_probabilities(probs), integral


# --- branch and bound ------------------------------------------------------

DUPLICATE = "duplicate"
FEASIBLE = "feasible"
BOUND = "bound"
BRANCH = "branch"


@dataclass(frozen=True)
class BnBNode:
    """One evaluated node: leading counts fixed, the rest relaxed."""

    fixed: tuple[int, ...]
    n: int
    relaxation: tuple[float, ...]
    relaxation_value: float
    feasible: bool
    action: str
    incumbent_before: float
    incumbent_after: float

    @property
    def fixed_probabilities(self) -> tuple[float, ...]:
        return tuple(c / self.n for c in self.fixed)


@dataclass
class BnBResult:
    allocation: CountAllocation
    trace: list[BnBNode] = field(default_factory=list)

    @property
    def pruned(self) -> dict[str, int]:
        counts = {DUPLICATE: 0, FEASIBLE: 0, BOUND: 0}
        for node in self.trace:
            if node.action in counts:
                counts[node.action] += 1
        return counts

    @property
    def nodes(self) -> int:
        return len(self.trace)


def branch_and_bound_maxent(K: int, n: int, *, trace: bool = False) -> CountAllocation | BnBResult:
    """Solve the integer max-entropy problem by branch and bound.

    Coordinates are fixed left to right over the grid ``0, 1, ..., n`` (counts),
    ascending.  A node is closed when

    * its subtree, or its integral relaxation optimum, was already evaluated
      up to permutation (entropy ignores order);
    * its relaxation bound does not beat the incumbent;
    * its relaxation optimum lies on the grid, making it the subtree's best.

    The incumbent starts at 0.  With ``trace=True`` a :class:`BnBResult`
    holding every evaluated node is returned instead of the bare allocation.
    """
    MaxEntProblem(K, n)
    nodes: list[BnBNode] = []
    seen_subtrees: set[tuple[tuple[int, ...], int]] = set()
    seen_solutions: set[tuple[int, ...]] = set()
    best_value = 0.0
    best_counts: tuple[int, ...] | None = None

    def visit(fixed: tuple[int, ...]) -> None:
        nonlocal best_value, best_counts
        free = K - len(fixed)
        probs, bound, integral = _relaxation_counts(fixed, K, n)
        before = best_value
        subtree_key = (tuple(sorted(fixed)), free)
        solution_key = tuple(sorted(integral)) if integral is not None else None

        if subtree_key in seen_subtrees or (solution_key is not None and solution_key in seen_solutions):
            action = DUPLICATE
        else:
            seen_subtrees.add(subtree_key)
            if solution_key is not None:
                seen_solutions.add(solution_key)
            if bound <= best_value + TOL and best_counts is not None:
                action = BOUND
            elif integral is not None:
                action = FEASIBLE
                if best_counts is None or bound > best_value + TOL:
                    best_value, best_counts = bound, integral
            elif bound <= best_value + TOL:
                action = BOUND
            else:
                action = BRANCH
        nodes.append(BnBNode(fixed, n, probs, bound, integral is not None, action, before, best_value))
        if action != BRANCH:
            return
        residual = n - sum(fixed)
        for c in range(residual + 1):
            visit(fixed + (c,))

    visit(())
    assert best_counts is not None
    allocation = CountAllocation.of(best_counts)
    return BnBResult(allocation, nodes) if trace else allocation


# --- verification ----------------------------------------------------------

def _partitions(n: int, parts: int, cap: int | None = None) -> Iterator[tuple[int, ...]]:
    """Non-increasing ``parts``-tuples of non-negative integers summing to ``n``."""
    cap = n if cap is None else cap
    if parts == 1:
        if n <= cap:
            yield (n,)
        return
    for first in range(min(n, cap), -1, -1):
        if first * parts < n:
            break
        for rest in _partitions(n - first, parts - 1, first):
            yield (first,) + rest


def enumerate_max_entropy(K: int, n: int) -> CountAllocation:
    """Exhaustive optimum over count multisets (order is irrelevant to entropy)."""
    MaxEntProblem(K, n)
    return max((CountAllocation.of(p) for p in _partitions(n, K)), key=lambda a: a.entropy)


@dataclass(frozen=True)
class VerificationCase:
    K: int
    n: int
    closed_form: float
    branch_and_bound: float
    brute_force: float
    pruned: Mapping[str, int]
    nodes: int

    @property
    def ok(self) -> bool:
        return (
            abs(self.closed_form - self.branch_and_bound) <= 1e-9
            and abs(self.closed_form - self.brute_force) <= 1e-9
        )


@dataclass
class VerificationReport:
    cases: list[VerificationCase]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.cases)

    @property
    def failures(self) -> list[tuple[int, int]]:
        return [(c.K, c.n) for c in self.cases if not c.ok]

    def pruned_totals(self) -> dict[str, int]:
        totals = {DUPLICATE: 0, FEASIBLE: 0, BOUND: 0}
        for c in self.cases:
            for rule, count in c.pruned.items():
                totals[rule] += count
        return totals


def verify_case(K: int, n: int) -> VerificationCase:
    result = branch_and_bound_maxent(K, n, trace=True)
    return VerificationCase(
        K=K,
        n=n,
        closed_form=closed_form_allocation(K, n).entropy,
        branch_and_bound=result.allocation.entropy,
        brute_force=enumerate_max_entropy(K, n).entropy,
        pruned=result.pruned,
        nodes=result.nodes,
    )


def verify_closed_form(K_max: int, n_max: int) -> VerificationReport:
    """Check the balanced allocation against B&B and enumeration for every K, n in range."""
    if K_max < 1 or n_max < 1:
        raise ValueError("K_max and n_max must be >= 1")
    return VerificationReport([verify_case(K, n) for K in range(1, K_max + 1) for n in range(1, n_max + 1)])
