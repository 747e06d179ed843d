"""Shared fixtures and independent oracles.

The oracles enumerate exhaustively (all committees, all permutations, all
candidate subsets) and never share code paths with the implementations they
check.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, permutations

import logging

import pytest

from committee_atlas.core import CandidateMetric, Committee, Election, candidate_distance
from committee_atlas.rules import ThieleWeights, thiele_score


@pytest.fixture(autouse=True, scope="session")
def _quiet_degenerate_jaccard_warnings():
    # random elections hit the no-approver Jaccard case constantly; tests that
    # assert on the warning re-enable it with caplog.at_level
    logging.getLogger("committee_atlas.core").setLevel(logging.ERROR)


@pytest.fixture
def running_example() -> Election:
    """Four voters over candidates p,q,r,s = 0,1,2,3."""
    return Election.from_approvals(4, [{0}, {1, 3}, {0, 2, 3}, {1}])


def random_election(
    rng: random.Random,
    m_range=(2, 8),
    n_range=(1, 10),
    density=(0.2, 0.8),
    allow_empty_ballots=True,
) -> Election:
    m = rng.randint(*m_range)
    n = rng.randint(*n_range)
    p = rng.uniform(*density)
    ballots = []
    for _ in range(n):
        ballot = {c for c in range(m) if rng.random() < p}
        if not allow_empty_ballots and not ballot:
            ballot = {rng.randrange(m)}
        ballots.append(ballot)
    return Election.from_approvals(m, ballots)


def exhaustive_thiele(e: Election, w: ThieleWeights, k: int) -> tuple[Committee, Fraction]:
    """Lex-min maximizer by scoring every committee."""
    best = None
    best_score = None
    for members in combinations(range(e.m), k):
        score = thiele_score(e, w, Committee(members))
        if best_score is None or score > best_score:
            best, best_score = members, score
    return Committee(best), best_score


def exhaustive_minimax(e: Election, k: int) -> tuple[Committee, int]:
    best = None
    best_cost = None
    for members in combinations(range(e.m), k):
        wset = set(members)
        cost = max(len(ballot - wset) + len(wset - ballot) for ballot in e.approvals)
        if best_cost is None or cost < best_cost:
            best, best_cost = members, cost
    return Committee(best), best_cost


def matching_oracle(weights) -> Fraction:
    """Minimum over all k! permutations."""
    k = len(weights)
    return min(
        sum((weights[i][perm[i]] for i in range(k)), Fraction(0))
        for perm in permutations(range(k))
    )


def committee_distance_oracle(
    e: Election, metric: CandidateMetric, x: Committee, y: Committee
) -> Fraction:
    weights = [
        [candidate_distance(e, metric, a, b) for b in y.members] for a in x.members
    ]
    return matching_oracle(weights)


def ejr_violated_oracle(e: Election, committee: Committee) -> bool:
    """Enumerate every (ell, candidate set) pair directly."""
    k = committee.k
    wset = set(committee.members)
    for ell in range(1, k + 1):
        need = Fraction(ell * e.n, k)
        for group_cands in combinations(range(e.m), ell):
            cands = set(group_cands)
            supporters = [
                v
                for v, ballot in enumerate(e.approvals)
                if cands <= ballot and len(ballot & wset) < ell
            ]
            if len(supporters) >= need:
                return True
    return False


def pjr_violated_oracle(e: Election, committee: Committee) -> bool:
    """Enumerate (ell, candidate set, committee subset) triples directly."""
    k = committee.k
    wset = set(committee.members)
    for ell in range(1, k + 1):
        need = Fraction(ell * e.n, k)
        for group_cands in combinations(range(e.m), ell):
            cands = set(group_cands)
            for inside in combinations(committee.members, ell - 1):
                allowed = set(inside)
                supporters = [
                    v
                    for v, ballot in enumerate(e.approvals)
                    if cands <= ballot and (ballot & wset) <= allowed
                ]
                if len(supporters) >= need:
                    return True
    return False
