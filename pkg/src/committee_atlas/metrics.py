"""Committee distances via min-weight perfect matching, and rule-distance matrices.

The matching runs on exact rationals (a Jonker-Volgenant style potential
method, cubic in the committee size), so committee distances are exact.
Floating point enters once, when per-election matrices are averaged into a
culture-level matrix.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .core import CandidateMetric, Committee, Election, candidate_distance
from .rules import RuleId

__all__ = [
    "DistanceMatrix",
    "MatchingInstance",
    "PerElectionMatrix",
    "average_matrices",
    "committee_distance",
    "min_weight_perfect_matching",
    "normalize_by_observed_max",
    "pairwise_rule_distances",
]


@dataclass(frozen=True)
class MatchingInstance:
    """A square nonnegative weight matrix; weights[i][j] is the cost of
    pairing left item i with right item j."""

    k: int
    weights: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.weights) != self.k or any(len(row) != self.k for row in self.weights):
            raise ValueError("weight matrix must be k x k")
        for row in self.weights:
            for entry in row:
                if entry < 0:
                    raise ValueError("matching weights must be nonnegative")

    @classmethod
    def of(cls, weights: Sequence[Sequence]) -> "MatchingInstance":
        rows = tuple(tuple(Fraction(x) for x in row) for row in weights)
        return cls(len(rows), rows)


def min_weight_perfect_matching(inst: MatchingInstance) -> tuple[tuple[int, ...], Fraction]:
    """Minimum-weight perfect matching of a k x k instance.

    Returns (assignment, weight) where assignment[i] is the column matched to
    row i. Among equally cheap matchings any one may be returned; the weight
    is what matters downstream.
    """
    k = inst.k
    if k == 0:
        return (), Fraction(0)
    a = inst.weights
    INF = float("inf")
    u = [Fraction(0)] * (k + 1)
    v = [Fraction(0)] * (k + 1)
    match = [0] * (k + 1)  # match[j] = row assigned to column j (1-based)
    way = [0] * (k + 1)
    for i in range(1, k + 1):
        match[0] = i
        j0 = 0
        minv = [INF] * (k + 1)
        used = [False] * (k + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = INF
            j1 = -1
            for j in range(1, k + 1):
                if used[j]:
                    continue
                cur = a[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(k + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    assignment = [0] * k
    for j in range(1, k + 1):
        assignment[match[j] - 1] = j - 1
    weight = sum((a[i][assignment[i]] for i in range(k)), Fraction(0))
    return tuple(assignment), weight


def committee_distance(
    e: Election, metric: CandidateMetric, x: Committee, y: Committee
) -> Fraction:
    """Distance between equal-size committees: the min-weight perfect matching
    of their members under the candidate metric. A candidate present in both
    committees appears on both sides."""
    if x.k != y.k:
        raise ValueError(f"committee sizes differ: {x.k} vs {y.k}")
    x.validate_for(e)
    y.validate_for(e)
    weights = tuple(
        tuple(candidate_distance(e, metric, a, b) for b in y.members) for a in x.members
    )
    _, weight = min_weight_perfect_matching(MatchingInstance(x.k, weights))
    return weight


@dataclass(frozen=True)
class PerElectionMatrix:
    """Exact symmetric rule-by-rule committee distances for one election."""

    rules: tuple[RuleId, ...]
    values: tuple[tuple[Fraction, ...], ...]

    def max_entry(self) -> Fraction:
        return max((x for row in self.values for x in row), default=Fraction(0))


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric rule-by-rule matrix of averaged normalized distances."""

    rules: tuple[RuleId, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        r = len(self.rules)
        if len(self.values) != r or any(len(row) != r for row in self.values):
            raise ValueError("matrix shape must match the rule list")
        for i in range(r):
            if self.values[i][i] != 0.0:
                raise ValueError("diagonal must be zero")
            for j in range(r):
                if self.values[i][j] != self.values[j][i]:
                    raise ValueError("matrix must be symmetric")

    def entry(self, a: RuleId, b: RuleId) -> float:
        i = self.rules.index(a)
        j = self.rules.index(b)
        return self.values[i][j]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rule," + ",".join(r.value for r in self.rules) + "\n")
        for rule, row in zip(self.rules, self.values):
            buf.write(rule.value + "," + ",".join(f"{x:.6f}" for x in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DistanceMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = lines[0].split(",")
        rules = tuple(RuleId.from_string(x) for x in header[1:])
        values = []
        for ln in lines[1:]:
            cells = ln.split(",")
            values.append(tuple(float(x) for x in cells[1:]))
        return cls(rules, tuple(values))


def pairwise_rule_distances(
    e: Election,
    committees: Mapping[RuleId, Committee],
    metric: CandidateMetric,
) -> PerElectionMatrix:
    """Symmetric matrix of committee distances over every pair of rules.

    Candidate-pair distances are cached across the matrix since rules share
    committee members heavily.
    """
    rules = tuple(committees.keys())
    sizes = {committees[r].k for r in rules}
    if len(sizes) > 1:
        raise ValueError("all committees must have the same size")
    cache: dict[tuple[int, int], Fraction] = {}

    def cand_dist(a: int, b: int) -> Fraction:
        key = (a, b) if a <= b else (b, a)
        val = cache.get(key)
        if val is None:
            val = candidate_distance(e, metric, key[0], key[1])
            cache[key] = val
        return val

    r = len(rules)
    grid: list[list[Fraction]] = [[Fraction(0)] * r for _ in range(r)]
    for i in range(r):
        for j in range(i + 1, r):
            x, y = committees[rules[i]], committees[rules[j]]
            weights = tuple(tuple(cand_dist(a, b) for b in y.members) for a in x.members)
            _, weight = min_weight_perfect_matching(MatchingInstance(x.k, weights))
            grid[i][j] = grid[j][i] = weight
    return PerElectionMatrix(rules, tuple(tuple(row) for row in grid))


def normalize_by_observed_max(mat: PerElectionMatrix) -> PerElectionMatrix:
    """Divide by the largest entry; the all-zero matrix is returned unchanged."""
    top = mat.max_entry()
    if top == 0:
        return mat
    values = tuple(tuple(x / top for x in row) for row in mat.values)
    return PerElectionMatrix(mat.rules, values)


def average_matrices(mats: Sequence[PerElectionMatrix]) -> DistanceMatrix:
    """Entrywise arithmetic mean, converted to floats at the very end."""
    if not mats:
        raise ValueError("need at least one matrix to average")
    rules = mats[0].rules
    for mat in mats:
        if mat.rules != rules:
            raise ValueError("matrices must share one rule ordering")
    r = len(rules)
    count = len(mats)
    values = tuple(
        tuple(float(sum((mat.values[i][j] for mat in mats), Fraction(0)) / count) for j in range(r))
        for i in range(r)
    )
    return DistanceMatrix(rules, values)
