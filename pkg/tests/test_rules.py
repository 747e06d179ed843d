import random
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import pytest

from committee_atlas.core import Committee, Election
from committee_atlas.rules import (
    RuleId,
    av_weights,
    cc_weights,
    equal_shares,
    geometric_weights,
    greedy_monroe,
    minimax_av,
    pav_weights,
    run_rule,
    sav,
    seq_phragmen,
    slav_weights,
    thiele_optimal,
    thiele_score,
    thiele_sequential,
)
from committee_atlas.rules import _equal_shares_phase, _greedy_monroe_rounds

from conftest import exhaustive_minimax, exhaustive_thiele, random_election

WEIGHT_FAMILIES = [av_weights(), pav_weights(), slav_weights(), cc_weights(), geometric_weights(2)]


@pytest.fixture
def three_ab_one_c() -> Election:
    return Election.from_approvals(3, [{0, 1}, {0, 1}, {0, 1}, {2}])


@pytest.fixture
def two_blocs() -> Election:
    """Five voters behind candidates 0-2, two voters behind 3-4."""
    return Election.from_approvals(5, [{0, 1, 2}] * 5 + [{3, 4}] * 2)


# --- scores -------------------------------------------------------------

def test_pav_score_example(three_ab_one_c):
    assert thiele_score(three_ab_one_c, pav_weights(), Committee((0, 1))) == Fraction(9, 2)


def test_cc_score_counts_coverage(three_ab_one_c):
    assert thiele_score(three_ab_one_c, cc_weights(), Committee((0, 2))) == 4


def test_score_zero_when_nothing_approved(three_ab_one_c):
    e = Election.from_approvals(4, [{0}, {1}])
    assert thiele_score(e, pav_weights(), Committee((2, 3))) == 0


# --- optimal thiele -------------------------------------------------------

def test_pav_optimal_example(three_ab_one_c):
    assert thiele_optimal(three_ab_one_c, pav_weights(), 2).members == (0, 1)


def test_cc_optimal_example(three_ab_one_c):
    assert thiele_optimal(three_ab_one_c, cc_weights(), 2).members == (0, 2)


def test_k_equals_m(three_ab_one_c):
    assert thiele_optimal(three_ab_one_c, pav_weights(), 3).members == (0, 1, 2)


def test_av_is_top_k_by_approvals():
    rng = random.Random(3)
    for _ in range(40):
        e = random_election(rng, m_range=(2, 9), n_range=(1, 12))
        k = rng.randint(1, e.m)
        counts = [len(e.approver_sets[c]) for c in range(e.m)]
        expected = tuple(sorted(sorted(range(e.m), key=lambda c: (-counts[c], c))[:k]))
        assert thiele_optimal(e, av_weights(), k).members == expected


@pytest.mark.parametrize("w", WEIGHT_FAMILIES, ids=lambda w: w.kind)
def test_optimal_matches_exhaustive(w):
    rng = random.Random(17)
    for _ in range(25):
        e = random_election(rng, m_range=(2, 9), n_range=(1, 10))
        k = rng.randint(1, min(4, e.m))
        got = thiele_optimal(e, w, k)
        want, want_score = exhaustive_thiele(e, w, k)
        assert thiele_score(e, w, got) == want_score
        assert got == want  # identical committee under lexicographic ties


def test_huge_weights_fall_back_to_exact_integers():
    # a geometric base this large overflows int64 scaling immediately
    rng = random.Random(9)
    w = geometric_weights(10**9)
    for _ in range(5):
        e = random_election(rng, m_range=(4, 8), n_range=(2, 6))
        k = rng.randint(1, min(3, e.m))
        got = thiele_optimal(e, w, k)
        want, want_score = exhaustive_thiele(e, w, k)
        assert got == want and thiele_score(e, w, got) == want_score


def test_weights_validation():
    with pytest.raises(ValueError):
        geometric_weights(1)
    e = Election.from_approvals(2, [{0}])
    from committee_atlas.rules import ThieleWeights

    increasing = ThieleWeights("bad", lambda i: Fraction(i))
    with pytest.raises(ValueError):
        thiele_optimal(e, increasing, 2)


# --- sequential thiele ----------------------------------------------------

def test_seq_cc_trace(three_ab_one_c):
    assert thiele_sequential(three_ab_one_c, cc_weights(), 2).members == (0, 2)


def test_seq_av_equals_av_top_k():
    rng = random.Random(5)
    for _ in range(25):
        e = random_election(rng)
        k = rng.randint(1, e.m)
        assert thiele_sequential(e, av_weights(), k) == thiele_optimal(e, av_weights(), k)


@pytest.mark.parametrize("w", WEIGHT_FAMILIES, ids=lambda w: w.kind)
def test_seq_k1_equals_optimal(w):
    rng = random.Random(29)
    for _ in range(20):
        e = random_election(rng)
        assert thiele_sequential(e, w, 1) == thiele_optimal(e, w, 1)


# --- sav -------------------------------------------------------------------

def test_sav_example():
    e = Election.from_approvals(3, [{0}, {1, 2}])
    assert sav(e, 1).members == (0,)


def test_sav_all_approve_everything():
    e = Election.from_approvals(5, [set(range(5))] * 3)
    assert sav(e, 2).members == (0, 1)


def test_sav_ignores_empty_ballots():
    e = Election.from_approvals(3, [set(), {1}])
    assert sav(e, 1).members == (1,)


# --- minimax ---------------------------------------------------------------

def test_minimax_tiebreak_example():
    e = Election.from_approvals(4, [{0, 1}, {2, 3}])
    assert minimax_av(e, 2).members == (0, 2)


def test_minimax_single_voter_exact_match():
    e = Election.from_approvals(5, [{1, 3}])
    assert minimax_av(e, 2).members == (1, 3)


def test_minimax_identical_voters():
    e = Election.from_approvals(4, [{0, 2}] * 3)
    assert minimax_av(e, 2).members == (0, 2)


def test_minimax_matches_exhaustive():
    rng = random.Random(41)
    for _ in range(40):
        e = random_election(rng, m_range=(2, 8), n_range=(1, 9))
        k = rng.randint(1, min(4, e.m))
        got = minimax_av(e, k)
        want, want_cost = exhaustive_minimax(e, k)
        assert got == want


# --- greedy monroe -----------------------------------------------------------

def test_greedy_monroe_quota_trace(two_blocs):
    rounds = _greedy_monroe_rounds(two_blocs, 3)
    assert [c for c, _ in rounds] == [0, 1, 3]
    assert [len(assigned) for _, assigned in rounds] == [3, 2, 2]
    assert greedy_monroe(two_blocs, 3).members == (0, 1, 3)


def test_greedy_monroe_unanimous():
    e = Election.from_approvals(2, [{0}] * 4)
    assert greedy_monroe(e, 1).members == (0,)


def test_greedy_monroe_one_voter_each():
    e = Election.from_approvals(4, [{0}, {1}, {2}, {3}])
    assert greedy_monroe(e, 4).members == (0, 1, 2, 3)


def test_greedy_monroe_assignment_invariants():
    rng = random.Random(59)
    for _ in range(30):
        e = random_election(rng, n_range=(1, 12))
        k = rng.randint(1, e.m)
        rounds = _greedy_monroe_rounds(e, k)
        assigned = [v for _, batch in rounds for v in batch]
        assert len(assigned) == len(set(assigned)) <= e.n
        cap = -(-e.n // k)
        assert all(len(batch) <= cap for _, batch in rounds)


# --- phragmen -----------------------------------------------------------------

def test_phragmen_load_trace(two_blocs):
    assert seq_phragmen(two_blocs, 3).members == (0, 1, 3)


def test_phragmen_single_candidate():
    e = Election.from_approvals(3, [{1}] * 4)
    assert seq_phragmen(e, 1).members == (1,)


def test_phragmen_two_blocs_balance():
    e = Election.from_approvals(4, [{0, 1}] * 3 + [{2, 3}] * 3)
    assert seq_phragmen(e, 2).members == (0, 2)


def test_phragmen_fills_with_unapproved_when_short():
    e = Election.from_approvals(4, [{2}])
    assert seq_phragmen(e, 3).members == (0, 1, 2)


# --- equal shares --------------------------------------------------------------

def test_equal_shares_completion_trace(two_blocs):
    elected, payments, budget = _equal_shares_phase(two_blocs, 3)
    assert elected == [0, 1]  # nothing else affordable: bloc B holds 6/7 < 1
    assert equal_shares(two_blocs, 3).members == (0, 1, 3)


def test_equal_shares_unanimous_rho():
    e = Election.from_approvals(2, [{0}] * 5)
    elected, payments, _ = _equal_shares_phase(e, 1)
    assert elected == [0]
    assert all(pay == Fraction(1, 5) for pay in payments.values())


def test_equal_shares_k_equals_n_distinct():
    e = Election.from_approvals(3, [{0}, {1}, {2}])
    elected, payments, _ = _equal_shares_phase(e, 3)
    assert equal_shares(e, 3).members == (0, 1, 2)
    assert all(pay == 1 for pay in payments.values())


def test_equal_shares_budget_conservation():
    rng = random.Random(71)
    for _ in range(30):
        e = random_election(rng, n_range=(1, 12), allow_empty_ballots=False)
        k = rng.randint(1, e.m)
        elected, payments, budget = _equal_shares_phase(e, k)
        total = sum(payments.values(), Fraction(0))
        assert total == len(elected)
        spent_by_voter = {}
        for (v, _), pay in payments.items():
            spent_by_voter[v] = spent_by_voter.get(v, Fraction(0)) + pay
            assert pay >= 0
        assert all(s <= Fraction(k, e.n) for s in spent_by_voter.values())
        assert all(b >= 0 for b in budget)


# --- dispatcher -----------------------------------------------------------------

def test_run_rule_examples(three_ab_one_c):
    assert run_rule(RuleId.PAV, three_ab_one_c, 2).members == (0, 1)
    assert run_rule(RuleId.AV, three_ab_one_c, 2).members == (0, 1)


def test_geometric_rule_is_optimal_thiele():
    rng = random.Random(83)
    for _ in range(10):
        e = random_election(rng)
        k = rng.randint(1, min(3, e.m))
        assert run_rule(RuleId.GEOM2, e, k) == thiele_optimal(e, geometric_weights(2), k)


def test_rule_ids_serialize_to_snake_case():
    expected = {
        "av", "sav", "pav", "seq_pav", "slav", "seq_slav", "cc", "seq_cc",
        "geom2", "geom3", "geom4", "geom5", "greedy_monroe", "minimax_av",
        "seq_phragmen", "equal_shares",
    }
    assert {r.value for r in RuleId} == expected
    assert RuleId.from_string("seq_phragmen") is RuleId.SEQ_PHRAGMEN


def test_all_rules_total_and_deterministic():
    rng = random.Random(97)
    e = random_election(rng, m_range=(5, 8), n_range=(4, 10))
    k = 3
    for rule in RuleId:
        first = run_rule(rule, e, k)
        assert first.k == k
        assert run_rule(rule, e, k) == first


def test_determinism_across_thread_schedules():
    rng = random.Random(101)
    e = random_election(rng, m_range=(6, 8), n_range=(6, 10))
    for rule in (RuleId.PAV, RuleId.EQUAL_SHARES, RuleId.MINIMAX_AV):
        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(lambda _: run_rule(rule, e, 3), range(8)))
        assert len(set(results)) == 1


def test_k_larger_than_m_rejected(three_ab_one_c):
    for rule in RuleId:
        with pytest.raises(ValueError):
            run_rule(rule, three_ab_one_c, 4)
