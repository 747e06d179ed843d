"""Exact solvers for the farthest-committees problem at desk scale.

Finding two size-k committees at maximum matching distance is intractable in
general, so these solvers carry explicit work budgets: brute force enumerates
committee pairs, the type-compressed solver enumerates per-type member
counts instead (candidates approved by the same voters are interchangeable
for any distance computed from approver sets), and the discrete metric has a
closed form. The experiment pipeline never calls these; observed maxima do
the normalizing there.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

from .core import CandidateMetric, Committee, Election, candidate_distance
from .metrics import MatchingInstance, min_weight_perfect_matching

__all__ = [
    "CandidateType",
    "FarthestResult",
    "WorkBudgetExceeded",
    "candidate_types",
    "fc_brute_force",
    "fc_discrete",
    "fc_type_compressed",
]


class WorkBudgetExceeded(RuntimeError):
    """The requested search would exceed the configured work budget."""


@dataclass(frozen=True)
class FarthestResult:
    x: Committee
    y: Committee
    distance: Fraction


@dataclass(frozen=True)
class CandidateType:
    """A maximal class of candidates sharing one approver set."""

    approver_set: frozenset[int]
    count: int
    members: tuple[int, ...]


def candidate_types(e: Election) -> tuple[CandidateType, ...]:
    """Partition candidates by approver set, ordered by first member index."""
    groups: dict[frozenset[int], list[int]] = {}
    for c in range(e.m):
        groups.setdefault(e.approver_sets[c], []).append(c)
    ordered = sorted(groups.values(), key=lambda members: members[0])
    return tuple(
        CandidateType(e.approver_sets[members[0]], len(members), tuple(members))
        for members in ordered
    )


def fc_brute_force(
    e: Election, k: int, metric: CandidateMetric, budget: int = 10**8
) -> FarthestResult:
    """Maximize the committee distance by enumerating all normalized pairs.

    Pairs are visited in lexicographic order on (x, y) with x <= y, and only
    strict improvements replace the incumbent, so the reported pair is the
    lexicographically smallest maximizer.
    """
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    work = comb(e.m, k) ** 2
    if work > budget:
        raise WorkBudgetExceeded(
            f"{work} matching evaluations exceed the budget of {budget}; "
            "try fc_type_compressed or smaller inputs"
        )
    cache: dict[tuple[int, int], Fraction] = {}

    def cand_dist(a: int, b: int) -> Fraction:
        key = (a, b) if a <= b else (b, a)
        val = cache.get(key)
        if val is None:
            val = candidate_distance(e, metric, key[0], key[1])
            cache[key] = val
        return val

    best: FarthestResult | None = None
    all_committees = list(combinations(range(e.m), k))
    for i, x in enumerate(all_committees):
        for y in all_committees[i:]:
            weights = tuple(tuple(cand_dist(a, b) for b in y) for a in x)
            _, dist = min_weight_perfect_matching(MatchingInstance(k, weights))
            if best is None or dist > best.distance:
                best = FarthestResult(Committee(x), Committee(y), dist)
    assert best is not None
    return best


def fc_discrete(e: Election, k: int) -> FarthestResult:
    """Closed form for the discrete metric: shared members match at cost 0 and
    the rest at cost 1, so the optimum is min(k, m-k), forced overlap
    max(0, 2k-m). The constructed pair is the one brute force would report.
    """
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    overlap = max(0, 2 * k - e.m)
    x = tuple(range(k))
    y = tuple(range(overlap)) + tuple(range(k, 2 * k - overlap))
    return FarthestResult(Committee(x), Committee(y), Fraction(min(k, e.m - k)))


def _count_vectors(limits: list[int], k: int) -> list[tuple[int, ...]]:
    """All vectors 0 <= u_i <= limits[i] with sum(u) == k, in lex order."""
    out: list[tuple[int, ...]] = []
    vec: list[int] = []

    def rec(i: int, left: int) -> None:
        if i == len(limits):
            if left == 0:
                out.append(tuple(vec))
            return
        tail = sum(limits[i + 1 :])
        lo = max(0, left - tail)
        hi = min(limits[i], left)
        for u in range(lo, hi + 1):
            vec.append(u)
            rec(i + 1, left - u)
            vec.pop()

    rec(0, k)
    return out


def fc_type_compressed(
    e: Election, k: int, metric: CandidateMetric, budget: int = 10**8
) -> FarthestResult:
    """Maximize the committee distance over per-type member counts.

    Same-type candidates have identical distances to everything, so a
    committee is determined, up to relabeling, by how many members it takes
    from each type; each pair of count vectors is scored by a k-by-k matching
    over type representatives. The discrete metric tells same-type candidates
    apart, so that case delegates to the closed-form solver.
    """
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    if metric is CandidateMetric.DISCRETE:
        return fc_discrete(e, k)
    types = candidate_types(e)
    t = len(types)
    limits = [min(tp.count, k) for tp in types]
    vectors = _count_vectors(limits, k)
    if len(vectors) ** 2 > budget:
        raise WorkBudgetExceeded(
            f"{len(vectors) ** 2} vector pairs exceed the budget of {budget}"
        )

    type_dist = [[Fraction(0)] * t for _ in range(t)]
    for i in range(t):
        for j in range(i + 1, t):
            d = candidate_distance(e, metric, types[i].members[0], types[j].members[0])
            type_dist[i][j] = type_dist[j][i] = d

    def expand(vec: tuple[int, ...]) -> list[int]:
        out = []
        for i, u in enumerate(vec):
            out.extend([i] * u)
        return out

    def reconstruct(vec: tuple[int, ...]) -> Committee:
        members: list[int] = []
        for i, u in enumerate(vec):
            members.extend(types[i].members[:u])
        return Committee.of(members)

    best: FarthestResult | None = None
    expanded = [expand(v) for v in vectors]
    for i, left in enumerate(expanded):
        for j in range(i, len(expanded)):
            right = expanded[j]
            weights = tuple(
                tuple(type_dist[a][b] for b in right) for a in left
            )
            _, dist = min_weight_perfect_matching(MatchingInstance(k, weights))
            if best is not None and dist < best.distance:
                continue
            x, y = reconstruct(vectors[i]), reconstruct(vectors[j])
            if x.members > y.members:
                x, y = y, x
            if (
                best is None
                or dist > best.distance
                or (x.members, y.members) < (best.x.members, best.y.members)
            ):
                best = FarthestResult(x, y, dist)
    assert best is not None
    return best
