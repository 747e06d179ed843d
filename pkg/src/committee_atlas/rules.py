"""Resolute winning-committee computation for 16 approval-based multiwinner rules.

Every rule is deterministic under lexicographic tie-breaking: ties between
candidates go to the smaller index, ties between committees to the
lexicographically smallest member tuple. Scores, loads, and budgets are kept
in exact rational or integer arithmetic so results are platform-independent.

Optimal Thiele rules and Minimax AV are solved by exact branch and bound
(depth-first over candidates in index order, include-branch first), which
degenerates to exhaustive search when the bounds never prune. Integer-scaled
weights keep the search in machine integers whenever they fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import Committee, Election

__all__ = [
    "RULE_LABELS",
    "RuleId",
    "ThieleWeights",
    "TieBreak",
    "av_weights",
    "cc_weights",
    "equal_shares",
    "geometric_weights",
    "greedy_monroe",
    "minimax_av",
    "pav_weights",
    "run_rule",
    "sav",
    "seq_phragmen",
    "slav_weights",
    "thiele_optimal",
    "thiele_score",
    "thiele_sequential",
]


class TieBreak(Enum):
    """Tie-breaking policy; only lexicographic (smallest candidate index) exists."""

    LEXICOGRAPHIC = "lexicographic"


class RuleId(str, Enum):
    AV = "av"
    SAV = "sav"
    PAV = "pav"
    SEQ_PAV = "seq_pav"
    SLAV = "slav"
    SEQ_SLAV = "seq_slav"
    CC = "cc"
    SEQ_CC = "seq_cc"
    GEOM2 = "geom2"
    GEOM3 = "geom3"
    GEOM4 = "geom4"
    GEOM5 = "geom5"
    GREEDY_MONROE = "greedy_monroe"
    MINIMAX_AV = "minimax_av"
    SEQ_PHRAGMEN = "seq_phragmen"
    EQUAL_SHARES = "equal_shares"

    @classmethod
    def from_string(cls, name: str) -> "RuleId":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown rule id {name!r}")


RULE_LABELS: dict[RuleId, str] = {
    RuleId.AV: "AV",
    RuleId.SAV: "SAV",
    RuleId.PAV: "PAV",
    RuleId.SEQ_PAV: "seq-PAV",
    RuleId.SLAV: "SLAV",
    RuleId.SEQ_SLAV: "seq-SLAV",
    RuleId.CC: "CC",
    RuleId.SEQ_CC: "seq-CC",
    RuleId.GEOM2: "G-2",
    RuleId.GEOM3: "G-3",
    RuleId.GEOM4: "G-4",
    RuleId.GEOM5: "G-5",
    RuleId.GREEDY_MONROE: "Greedy Monroe",
    RuleId.MINIMAX_AV: "Minimax AV",
    RuleId.SEQ_PHRAGMEN: "seq-Phragmen",
    RuleId.EQUAL_SHARES: "Equal Shares",
}


@dataclass(frozen=True)
class ThieleWeights:
    """A non-increasing weight sequence w(1), w(2), ... with w(1) > 0.

    A committee's score is the sum, over voters, of w(1) + ... + w(j) where j
    is the number of committee members the voter approves.
    """

    kind: str
    w: Callable[[int], Fraction]


def av_weights() -> ThieleWeights:
    return ThieleWeights("av", lambda i: Fraction(1))


def pav_weights() -> ThieleWeights:
    return ThieleWeights("pav", lambda i: Fraction(1, i))


def slav_weights() -> ThieleWeights:
    return ThieleWeights("slav", lambda i: Fraction(1, 2 * i - 1))


def cc_weights() -> ThieleWeights:
    return ThieleWeights("cc", lambda i: Fraction(1) if i == 1 else Fraction(0))


def geometric_weights(p) -> ThieleWeights:
    """Weights p^-i for rational p > 1; larger p favors smaller groups harder."""
    p = Fraction(p)
    if p <= 1:
        raise ValueError("geometric weights require p > 1")
    return ThieleWeights(f"geometric({p})", lambda i: p ** (-i))


def _weight_table(w: ThieleWeights, k: int) -> list[Fraction]:
    """w(1)..w(k), validated non-increasing with w(1) > 0."""
    table = [w.w(i) for i in range(1, k + 1)]
    if not table:
        return table
    if table[0] <= 0:
        raise ValueError("thiele weights need w(1) > 0")
    for a, b in zip(table, table[1:]):
        if b > a:
            raise ValueError("thiele weights must be non-increasing")
        if b < 0:
            raise ValueError("thiele weights must be nonnegative")
    return table


def _scaled_weight_table(w: ThieleWeights, k: int) -> list[int]:
    """Integer multiples of w(1)..w(k) by the common denominator (index 0 unused)."""
    table = _weight_table(w, k)
    den = 1
    for f in table:
        den = den * f.denominator // math.gcd(den, f.denominator)
    return [0] + [int(f * den) for f in table]


def _approval_matrix(e: Election) -> np.ndarray:
    mat = np.zeros((e.n, e.m), dtype=np.int64)
    for v, ballot in enumerate(e.approvals):
        for c in ballot:
            mat[v, c] = 1
    return mat


def thiele_score(e: Election, w: ThieleWeights, committee: Committee) -> Fraction:
    """Exact score of ``committee``: per voter, the cumulative weight of their hits."""
    committee.validate_for(e)
    k = committee.k
    table = _weight_table(w, k)
    cum = [Fraction(0)]
    for f in table:
        cum.append(cum[-1] + f)
    wmask = 0
    for c in committee:
        wmask |= 1 << c
    total = Fraction(0)
    for ballot_mask in e.ballot_masks:
        total += cum[(ballot_mask & wmask).bit_count()]
    return total


def _greedy_thiele_scaled(mat: np.ndarray, wt: np.ndarray, k: int) -> tuple[list[int], int]:
    """Greedy committee and its exact scaled score; np.argmax ties go lex-first."""
    n, m = mat.shape
    cnt = np.zeros(n, dtype=np.int64)
    chosen: list[int] = []
    score = 0
    taken = np.zeros(m, dtype=bool)
    for _ in range(k):
        gains = wt[cnt + 1] @ mat
        gains[taken] = -1
        c = int(np.argmax(gains))
        score += int(gains[c])
        chosen.append(c)
        taken[c] = True
        cnt += mat[:, c]
    return sorted(chosen), score


def thiele_sequential(
    e: Election, w: ThieleWeights, k: int, tb: TieBreak = TieBreak.LEXICOGRAPHIC
) -> Committee:
    """Greedy Thiele: k rounds, each adding the candidate with the largest
    marginal score, smaller index on ties."""
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    mat, wt = _prepare_scaled(e, w, k)
    chosen, _ = _greedy_thiele_scaled(mat, wt, k)
    return Committee.of(chosen)


def _prepare_scaled(e: Election, w: ThieleWeights, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Approval matrix plus the scaled weight array (index 0 unused).

    Scores and search bounds stay under 2*n*k*max(w); weights beyond what
    int64 can carry there switch to python-int (object dtype) arithmetic.
    """
    wtab = _scaled_weight_table(w, k)
    mat = _approval_matrix(e)
    exact = wtab and 2 * e.n * max(k, 1) * max(wtab) >= 2**62
    wt = np.array(wtab, dtype=object if exact else np.int64)
    return mat, wt


def thiele_optimal(
    e: Election, w: ThieleWeights, k: int, tb: TieBreak = TieBreak.LEXICOGRAPHIC
) -> Committee:
    """Lexicographically smallest committee maximizing the Thiele score.

    Branch and bound over candidates in index order, include-branch first, so
    complete committees are visited in lexicographic order and the first
    optimum found is the smallest. The bound adds the k-r largest current
    marginal gains of undecided candidates, admissible because marginal gains
    only shrink as the committee grows (the score is submodular for
    non-increasing weights). The incumbent starts one below the greedy score,
    which preserves the first-found-is-lex-smallest argument.
    """
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    _weight_table(w, k)
    if k == 0:
        return Committee(())
    if k == e.m:
        return Committee(tuple(range(e.m)))
    mat, wt = _prepare_scaled(e, w, k)
    n, m = mat.shape
    _, greedy_score = _greedy_thiele_scaled(mat, wt, k)

    best_score = greedy_score - 1
    best: tuple[int, ...] | None = None
    cnt = np.zeros(n, dtype=np.int64)
    chosen: list[int] = []

    def dfs(pos: int, cur) -> None:
        nonlocal best, best_score
        r = len(chosen)
        if r == k:
            if cur > best_score:
                best_score = cur
                best = tuple(chosen)
            return
        if m - pos < k - r:
            return
        gains = wt[cnt + 1] @ mat[:, pos:]
        need = k - r
        top = np.sort(gains)[m - pos - need:]
        if cur + top.sum() <= best_score:
            return
        col = mat[:, pos]
        gain = int(wt[cnt + 1] @ col)
        chosen.append(pos)
        np.add(cnt, col, out=cnt)
        dfs(pos + 1, cur + gain)
        chosen.pop()
        np.subtract(cnt, col, out=cnt)
        dfs(pos + 1, cur)

    dfs(0, 0)
    assert best is not None
    return Committee(best)


def sav(e: Election, k: int, tb: TieBreak = TieBreak.LEXICOGRAPHIC) -> Committee:
    """Satisfaction AV: top-k candidates by the sum of 1/|ballot| over their
    approvers. The objective is additive, so sorting is exact; voters with
    empty ballots contribute nothing."""
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    weights = [Fraction(0)] * e.m
    for ballot in e.approvals:
        if not ballot:
            continue
        share = Fraction(1, len(ballot))
        for c in ballot:
            weights[c] += share
    order = sorted(range(e.m), key=lambda c: (-weights[c], c))
    return Committee.of(order[:k])


def minimax_av(e: Election, k: int, tb: TieBreak = TieBreak.LEXICOGRAPHIC) -> Committee:
    """Committee minimizing the maximum voter Hamming distance, by exact
    branch and bound.

    The per-voter lower bound combines members already chosen outside the
    ballot plus approved candidates already excluded, with the cardinality
    bound k + |ballot| - 2 * (largest achievable overlap). Both never
    overestimate the final distance, so pruning is safe. Index-order DFS with
    a strict incumbent yields the lexicographically smallest optimum.
    """
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    if k == e.m:
        return Committee(tuple(range(e.m)))
    mat = _approval_matrix(e)
    n, m = mat.shape
    sizes = mat.sum(axis=1)

    counts = mat.sum(axis=0)
    seed = np.argsort(-counts, kind="stable")[:k]
    inter = mat[:, seed].sum(axis=1) if k else np.zeros(n, dtype=np.int64)
    best_cost = int((sizes + k - 2 * inter).max()) + 1
    best: tuple[int, ...] | None = None

    pnota = np.zeros(n, dtype=np.int64)  # members chosen outside the ballot
    lost = np.zeros(n, dtype=np.int64)   # approved candidates already excluded
    poss = sizes.copy()                  # approved candidates still reachable
    inp = np.zeros(n, dtype=np.int64)    # approved members chosen so far
    chosen: list[int] = []

    def dfs(pos: int) -> None:
        nonlocal best, best_cost
        r = len(chosen)
        if r == k:
            cost = int((sizes + k - 2 * inp).max())
            if cost < best_cost:
                best_cost = cost
                best = tuple(chosen)
            return
        if m - pos < k - r:
            return
        reach = np.minimum(poss, inp + (k - r))
        lb = int(np.maximum(pnota + lost, sizes + k - 2 * reach).max())
        if lb >= best_cost:
            return
        col = mat[:, pos]
        notcol = 1 - col
        chosen.append(pos)
        np.add(pnota, notcol, out=pnota)
        np.add(inp, col, out=inp)
        dfs(pos + 1)
        chosen.pop()
        np.subtract(pnota, notcol, out=pnota)
        np.subtract(inp, col, out=inp)
        np.add(lost, col, out=lost)
        np.subtract(poss, col, out=poss)
        dfs(pos + 1)
        np.subtract(lost, col, out=lost)
        np.add(poss, col, out=poss)

    dfs(0)
    assert best is not None
    return Committee(best)


def _greedy_monroe_rounds(e: Election, k: int) -> list[tuple[int, tuple[int, ...]]]:
    """Per-round (candidate, assigned voters); quotas ceil(n/k) for the first
    n mod k rounds, floor(n/k) afterwards."""
    n, m = e.n, e.m
    hi, rem = divmod(n, k)
    quotas = [hi + 1] * rem + [hi] * (k - rem)
    unassigned = (1 << n) - 1
    selected: set[int] = set()
    rounds: list[tuple[int, tuple[int, ...]]] = []
    masks = e.approver_masks
    for quota in quotas:
        best_c, best_count = -1, -1
        for c in range(m):
            if c in selected:
                continue
            count = (masks[c] & unassigned).bit_count()
            if count > best_count:
                best_c, best_count = c, count
        avail = masks[best_c] & unassigned
        take = min(quota, best_count)
        assigned = []
        for _ in range(take):
            low = avail & -avail
            assigned.append(low.bit_length() - 1)
            avail ^= low
            unassigned ^= low
        selected.add(best_c)
        rounds.append((best_c, tuple(assigned)))
    return rounds


def greedy_monroe(e: Election, k: int, tb: TieBreak = TieBreak.LEXICOGRAPHIC) -> Committee:
    """k rounds, each electing the candidate approved by the most
    still-unassigned voters and assigning it up to a quota of them (smallest
    voter indices first)."""
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    if k == 0:
        return Committee(())
    return Committee.of(c for c, _ in _greedy_monroe_rounds(e, k))


def _phragmen_extend(
    e: Election,
    k: int,
    selected: list[int],
    loads: list[Fraction],
) -> list[int]:
    """Sequential Phragmen from the given selection and voter loads.

    Next candidate minimizes (1 + total load of its approvers) / #approvers;
    its approvers' loads all become that value. Approver-less candidates are
    only used to fill seats once every approved candidate is selected.
    """
    chosen = set(selected)
    approver_sets = e.approver_sets
    while len(selected) < k:
        best_c = -1
        best_load: Fraction | None = None
        for c in range(e.m):
            if c in chosen or not approver_sets[c]:
                continue
            load = (1 + sum((loads[v] for v in approver_sets[c]), Fraction(0))) / len(
                approver_sets[c]
            )
            if best_load is None or load < best_load:
                best_c, best_load = c, load
        if best_c < 0:
            for c in range(e.m):
                if c not in chosen:
                    best_c = c
                    break
            chosen.add(best_c)
            selected.append(best_c)
            continue
        for v in approver_sets[best_c]:
            loads[v] = best_load
        chosen.add(best_c)
        selected.append(best_c)
    return selected


def seq_phragmen(e: Election, k: int, tb: TieBreak = TieBreak.LEXICOGRAPHIC) -> Committee:
    """Sequential Phragmen in the discrete voter-load formulation."""
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    loads = [Fraction(0)] * e.n
    return Committee.of(_phragmen_extend(e, k, [], loads))


def _equal_shares_phase(
    e: Election, k: int
) -> tuple[list[int], dict[tuple[int, int], Fraction], list[Fraction]]:
    """The fixed-budget purchase phase.

    Voters hold k/n; each round elects the affordable candidate whose unit
    cost splits at the smallest per-voter cap rho, approvers paying
    min(budget, rho). Returns (elected order, payments, remaining budgets).
    """
    n = e.n
    budget = [Fraction(k, n)] * n
    payments: dict[tuple[int, int], Fraction] = {}
    elected: list[int] = []
    approver_sets = e.approver_sets
    while len(elected) < k:
        best_c = -1
        best_rho: Fraction | None = None
        for c in range(e.m):
            if c in elected or not approver_sets[c]:
                continue
            supporters = approver_sets[c]
            if sum((budget[v] for v in supporters), Fraction(0)) < 1:
                continue
            ordered = sorted(budget[v] for v in supporters)
            s = len(ordered)
            prefix = Fraction(0)
            rho = None
            for t in range(s):
                cap = (1 - prefix) / (s - t)
                if cap <= ordered[t]:
                    rho = cap
                    break
                prefix += ordered[t]
            assert rho is not None
            if best_rho is None or rho < best_rho:
                best_c, best_rho = c, rho
        if best_c < 0:
            break
        for v in approver_sets[best_c]:
            pay = min(budget[v], best_rho)
            budget[v] -= pay
            payments[(v, best_c)] = pay
        elected.append(best_c)
    return elected, payments, budget


def equal_shares(e: Election, k: int, tb: TieBreak = TieBreak.LEXICOGRAPHIC) -> Committee:
    """Method of Equal Shares, completed with sequential Phragmen whose voter
    loads start at each voter's purchase-phase spending."""
    if k > e.m:
        raise ValueError("committee size exceeds candidate count")
    elected, _, budget = _equal_shares_phase(e, k)
    if len(elected) < k:
        loads = [Fraction(k, e.n) - b for b in budget]
        elected = _phragmen_extend(e, k, elected, loads)
    return Committee.of(elected)


def run_rule(rule: RuleId, e: Election, k: int) -> Committee:
    """Dispatch to the rule implementation with lexicographic tie-breaking."""
    tb = TieBreak.LEXICOGRAPHIC
    optimal = {
        RuleId.AV: av_weights,
        RuleId.PAV: pav_weights,
        RuleId.SLAV: slav_weights,
        RuleId.CC: cc_weights,
    }
    sequential = {
        RuleId.SEQ_PAV: pav_weights,
        RuleId.SEQ_SLAV: slav_weights,
        RuleId.SEQ_CC: cc_weights,
    }
    geometric = {RuleId.GEOM2: 2, RuleId.GEOM3: 3, RuleId.GEOM4: 4, RuleId.GEOM5: 5}
    if rule in optimal:
        return thiele_optimal(e, optimal[rule](), k, tb)
    if rule in sequential:
        return thiele_sequential(e, sequential[rule](), k, tb)
    if rule in geometric:
        return thiele_optimal(e, geometric_weights(geometric[rule]), k, tb)
    if rule is RuleId.SAV:
        return sav(e, k, tb)
    if rule is RuleId.MINIMAX_AV:
        return minimax_av(e, k, tb)
    if rule is RuleId.GREEDY_MONROE:
        return greedy_monroe(e, k, tb)
    if rule is RuleId.SEQ_PHRAGMEN:
        return seq_phragmen(e, k, tb)
    if rule is RuleId.EQUAL_SHARES:
        return equal_shares(e, k, tb)
    raise ValueError(f"unhandled rule {rule}")
