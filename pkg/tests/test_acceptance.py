"""Acceptance suite: one test per criterion, tolerances pinned inline.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion. The reduced-scale experiment (m=30, n=50, k=5, 200 instances per
culture) keeps the structural invariants of the full-scale setup: the
resampling central ballot and each party hold at least k candidates, and the
disjoint culture's central ballots partition the candidates. Everything is
seeded, so these tests are exact reruns, not statistical gambles.
"""

from __future__ import annotations

import glob
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import pytest

from committee_atlas.axioms import Axiom, axiom_profile, check_ejr, check_pjr, find_cohesive_group
from committee_atlas.core import CandidateMetric, Committee, Election, candidate_distance
from committee_atlas.cultures import (
    derive_rng,
    sample_disjoint,
    sample_euclidean,
    sample_party_list,
    sample_resampling,
)
from committee_atlas.farthest import fc_brute_force, fc_type_compressed
from committee_atlas.metrics import (
    DistanceMatrix,
    average_matrices,
    committee_distance,
    normalize_by_observed_max,
    pairwise_rule_distances,
)
from committee_atlas.pipeline import config_from_dict, embed_stress_min, run_experiment
from committee_atlas.rules import (
    RuleId,
    av_weights,
    cc_weights,
    geometric_weights,
    minimax_av,
    pav_weights,
    run_rule,
    slav_weights,
    thiele_optimal,
)

from conftest import (
    committee_distance_oracle,
    ejr_violated_oracle,
    exhaustive_minimax,
    exhaustive_thiele,
    pjr_violated_oracle,
    random_election,
)

SEED = 20240810
M, N, K, COUNT = 30, 50, 5, 200
JOBS = min(4, os.cpu_count() or 1)

CULTURES = ("resampling", "disjoint", "euclidean_1d", "euclidean_2d", "party_list")
TABLE_RULES = (
    RuleId.EQUAL_SHARES,
    RuleId.PAV,
    RuleId.SEQ_PHRAGMEN,
    RuleId.GREEDY_MONROE,
    RuleId.AV,
    RuleId.CC,
    RuleId.SEQ_PAV,
)
MAP_EXTRA_RULES = (RuleId.MINIMAX_AV, RuleId.SLAV, RuleId.SEQ_SLAV)
PROPORTIONAL = (
    RuleId.PAV,
    RuleId.SEQ_PAV,
    RuleId.SEQ_PHRAGMEN,
    RuleId.EQUAL_SHARES,
    RuleId.SLAV,
    RuleId.SEQ_SLAV,
    RuleId.GREEDY_MONROE,
)


def sample_instance(culture: str, index: int) -> Election:
    rng = derive_rng(SEED, culture, index)
    phi = index / (COUNT - 1)
    if culture == "resampling":
        return sample_resampling(M, N, 0.17, phi, rng)
    if culture == "disjoint":
        return sample_disjoint(M, N, 0.17, phi, 6, rng)
    if culture == "euclidean_1d":
        return sample_euclidean(M, N, 1, 0.05, rng)
    if culture == "euclidean_2d":
        return sample_euclidean(M, N, 2, 0.2, rng)
    if culture == "party_list":
        return sample_party_list(M, N, 6, 0.34, rng)
    raise ValueError(culture)


def _solve_and_audit(args):
    culture, index = args
    e = sample_instance(culture, index)
    rules = TABLE_RULES + (MAP_EXTRA_RULES if culture == "disjoint" else ())
    committees = {rule: run_rule(rule, e, K) for rule in rules}
    flags = {
        rule.value: {a.value: v.holds for a, v in axiom_profile(e, committees[rule]).items()}
        for rule in TABLE_RULES
    }
    cohesive = (
        find_cohesive_group(e, frozenset(range(e.n)), 2, Fraction(2 * e.n, K)) is not None
    )
    grid = None
    if culture == "disjoint":
        ordered = {rule: committees[rule] for rule in PROPORTIONAL + (RuleId.AV, RuleId.CC, RuleId.MINIMAX_AV)}
        grid = normalize_by_observed_max(
            pairwise_rule_distances(e, ordered, CandidateMetric.JACCARD)
        )
    return culture, index, flags, cohesive, grid


@pytest.fixture(scope="session")
def experiment():
    """Committees, axiom flags, cohesive-group flags, and the disjoint-culture
    distance matrix for all 5 cultures x 200 instances."""
    tasks = [(culture, i) for culture in CULTURES for i in range(COUNT)]
    with ProcessPoolExecutor(max_workers=JOBS) as pool:
        rows = list(pool.map(_solve_and_audit, tasks, chunksize=8))
    flags = {c: {r.value: [None] * COUNT for r in TABLE_RULES} for c in CULTURES}
    cohesive = {c: [None] * COUNT for c in CULTURES}
    disjoint_grids = [None] * COUNT
    for culture, index, inst_flags, coh, grid in rows:
        for rule_value, per_axiom in inst_flags.items():
            flags[culture][rule_value][index] = per_axiom
        cohesive[culture][index] = coh
        if grid is not None:
            disjoint_grids[index] = grid
    matrix = average_matrices(disjoint_grids)
    return {"flags": flags, "cohesive": cohesive, "disjoint_matrix": matrix}


def fraction(experiment, culture: str, rule: RuleId, axiom: Axiom) -> Fraction:
    flags = experiment["flags"][culture][rule.value]
    return Fraction(sum(1 for f in flags if f[axiom.value]), COUNT)


def report(line: str) -> None:
    print(f"\n{line}")


# --- criterion 1: worked-example exactness (tolerance: zero) ------------------

def test_criterion_1_distance_examples_exact():
    e = Election.from_approvals(4, [{0}, {1, 3}, {0, 2, 3}, {1}])
    expected = {
        (0, 1): (Fraction(1), Fraction(1)),
        (0, 2): (Fraction(1, 4), Fraction(1, 2)),
        (0, 3): (Fraction(1, 2), Fraction(2, 3)),
        (1, 2): (Fraction(3, 4), Fraction(1)),
    }
    for (c, d), (nham, jac) in expected.items():
        assert candidate_distance(e, CandidateMetric.NORMALIZED_HAMMING, c, d) == nham
        assert candidate_distance(e, CandidateMetric.JACCARD, c, d) == jac
    report("ACCEPTANCE 1 worked-example exactness: PASS (six values exact)")


# --- criterion 2: pseudodistance suite, 10,000 random triples -----------------

def _pseudodistance_chunk(args):
    seed, count = args
    rng = random.Random(seed)
    for _ in range(count):
        e = random_election(rng, m_range=(2, 8), n_range=(1, 10))
        k = rng.randint(1, min(4, e.m))
        x, y, z = (Committee.of(rng.sample(range(e.m), k)) for _ in range(3))
        for metric in CandidateMetric:
            if committee_distance(e, metric, x, x) != 0:
                return f"identity failed: {metric}"
            dxy = committee_distance(e, metric, x, y)
            if dxy != committee_distance(e, metric, y, x):
                return f"symmetry failed: {metric}"
            if dxy > committee_distance(e, metric, x, z) + committee_distance(e, metric, z, y):
                return f"triangle failed: {metric}"
    return None


def test_criterion_2_pseudodistance_properties():
    total = 10_000
    chunks = [(1000 + i, total // 20) for i in range(20)]
    with ProcessPoolExecutor(max_workers=JOBS) as pool:
        failures = [f for f in pool.map(_pseudodistance_chunk, chunks) if f]
    assert not failures, failures
    report(
        "ACCEPTANCE 2 pseudodistance properties: PASS "
        f"({total} random triples, 4 metrics, exact arithmetic)"
    )


# --- criterion 3: oracle equivalence, >= 500 instances per operation -----------

def _oracle_chunk(args):
    seed, count = args
    rng = random.Random(seed)
    weight_families = [av_weights(), pav_weights(), slav_weights(), cc_weights(), geometric_weights(2)]
    mism = []
    for t in range(count):
        e = random_election(rng, m_range=(2, 10), n_range=(1, 10))
        k = rng.randint(1, min(4, e.m))

        w = weight_families[t % len(weight_families)]
        if thiele_optimal(e, w, k) != exhaustive_thiele(e, w, k)[0]:
            mism.append("thiele_optimal")
        if minimax_av(e, k) != exhaustive_minimax(e, k)[0]:
            mism.append("minimax_av")

        x = Committee.of(rng.sample(range(e.m), k))
        y = Committee.of(rng.sample(range(e.m), k))
        metric = list(CandidateMetric)[t % 4]
        if committee_distance(e, metric, x, y) != committee_distance_oracle(e, metric, x, y):
            mism.append("committee_distance")

        small = random_election(rng, m_range=(2, 7), n_range=(1, 8))
        ks = rng.randint(1, min(4, small.m))
        committee = Committee.of(rng.sample(range(small.m), ks))
        if check_ejr(small, committee).holds != (not ejr_violated_oracle(small, committee)):
            mism.append("check_ejr")
        if check_pjr(small, committee).holds != (not pjr_violated_oracle(small, committee)):
            mism.append("check_pjr")

        fc_e = random_election(rng, m_range=(2, 7), n_range=(1, 4))
        fc_k = rng.randint(1, min(3, fc_e.m))
        fc_metric = CandidateMetric.HAMMING if t % 2 else CandidateMetric.JACCARD
        brute = fc_brute_force(fc_e, fc_k, fc_metric)
        typed = fc_type_compressed(fc_e, fc_k, fc_metric)
        if brute.distance != typed.distance:
            mism.append("fc_type_compressed")
    return mism


def test_criterion_3_oracle_equivalence():
    total = 500
    chunks = [(5000 + i, total // 10) for i in range(10)]
    with ProcessPoolExecutor(max_workers=JOBS) as pool:
        mismatches = [m for chunk in pool.map(_oracle_chunk, chunks) for m in chunk]
    assert mismatches == [], mismatches
    report(
        "ACCEPTANCE 3 oracle equivalence: PASS "
        f"({total} instances per operation family, zero mismatches)"
    )


# --- criterion 4: axiomatic guarantees as hard tests ----------------------------

GUARANTEES = {
    RuleId.EQUAL_SHARES: (Axiom.PRICEABLE, Axiom.EJR, Axiom.PJR, Axiom.JR),
    RuleId.PAV: (Axiom.EJR, Axiom.PJR, Axiom.JR),
    RuleId.SEQ_PHRAGMEN: (Axiom.PRICEABLE, Axiom.PJR, Axiom.JR),
    RuleId.GREEDY_MONROE: (Axiom.PJR, Axiom.JR),  # k divides n at this scale
}


def test_criterion_4_axiomatic_guarantees(experiment):
    assert N % K == 0  # greedy monroe guarantee applies
    failures = []
    for rule, axioms in GUARANTEES.items():
        for culture in CULTURES:
            for axiom in axioms:
                frac = fraction(experiment, culture, rule, axiom)
                if frac != 1:
                    failures.append(f"{rule.value}/{culture}/{axiom.value}={frac}")
    assert not failures, failures
    report(
        "ACCEPTANCE 4 axiomatic guarantees: PASS "
        f"(100% over {COUNT} instances x {len(CULTURES)} cultures)"
    )


# --- criterion 5: Table-1 qualitative reproduction at reduced scale -------------

def test_criterion_5_fraction_table_bands(experiment):
    cc_price = fraction(experiment, "party_list", RuleId.CC, Axiom.PRICEABLE)
    av_jr = fraction(experiment, "party_list", RuleId.AV, Axiom.JR)
    av_price_1d = fraction(experiment, "euclidean_1d", RuleId.AV, Axiom.PRICEABLE)
    assert cc_price <= Fraction(5, 100), f"party-list CC priceability {cc_price}"
    assert av_jr <= Fraction(25, 100), f"party-list AV JR {av_jr}"
    assert av_price_1d <= Fraction(10, 100), f"1D AV priceability {av_price_1d}"
    for axiom in Axiom:
        frac = fraction(experiment, "resampling", RuleId.SEQ_PAV, axiom)
        assert frac >= Fraction(99, 100), f"resampling seq-PAV {axiom.value} {frac}"
    for culture in CULTURES:
        for rule in TABLE_RULES:
            jr = fraction(experiment, culture, rule, Axiom.JR)
            pjr = fraction(experiment, culture, rule, Axiom.PJR)
            ejr = fraction(experiment, culture, rule, Axiom.EJR)
            assert jr >= pjr >= ejr, f"monotonicity broken: {culture}/{rule.value}"
    report(
        "ACCEPTANCE 5 table reproduction: PASS "
        f"(CC priceability {float(cc_price):.3f} <= 0.05, AV JR {float(av_jr):.3f} <= 0.25, "
        f"1D AV priceability {float(av_price_1d):.3f} <= 0.10, seq-PAV >= 0.99, "
        "JR >= PJR >= EJR in every cell)"
    )


# --- criterion 6: cohesive-group statistic direction ------------------------------

def test_criterion_6_cohesive_group_direction(experiment):
    res = Fraction(sum(experiment["cohesive"]["resampling"]), COUNT)
    dis = Fraction(sum(experiment["cohesive"]["disjoint"]), COUNT)
    assert dis < res
    assert res - dis >= Fraction(1, 10)
    report(
        "ACCEPTANCE 6 cohesive-group direction: PASS "
        f"(disjoint {float(dis):.3f} < resampling {float(res):.3f}, gap >= 0.1)"
    )


# --- criterion 7: map structure on the disjoint culture ----------------------------

def test_criterion_7_map_structure(experiment):
    matrix: DistanceMatrix = experiment["disjoint_matrix"]
    singles = (RuleId.AV, RuleId.CC, RuleId.MINIMAX_AV)

    intra = [
        matrix.entry(a, b)
        for i, a in enumerate(PROPORTIONAL)
        for b in PROPORTIONAL[i + 1 :]
    ]
    intra_avg = sum(intra) / len(intra)
    for outsider in singles:
        to_outsider = sum(matrix.entry(rule, outsider) for rule in PROPORTIONAL) / len(PROPORTIONAL)
        assert intra_avg < to_outsider, f"cluster not tighter than link to {outsider.value}"

    entries = sorted((x for row in matrix.values for x in row), reverse=True)
    top = entries[math.ceil(0.2 * len(entries)) - 1]
    for a, b in ((RuleId.AV, RuleId.CC), (RuleId.AV, RuleId.MINIMAX_AV), (RuleId.CC, RuleId.MINIMAX_AV)):
        assert matrix.entry(a, b) >= top, f"d({a.value},{b.value}) not in top 20%"

    triangle = DistanceMatrix(
        (RuleId.AV, RuleId.CC, RuleId.PAV),
        ((0.0, 3.0, 4.0), (3.0, 0.0, 5.0), (4.0, 5.0, 0.0)),
    )
    emb = embed_stress_min(triangle, seed=0)
    assert emb.stress < 1e-10
    report(
        "ACCEPTANCE 7 map structure: PASS "
        f"(intra-cluster {intra_avg:.3f} below every outsider link; AV/CC/MAV pairwise in "
        f"top 20%; triangle stress {emb.stress:.2e} < 1e-10)"
    )


# --- criterion 8: byte-identical pipeline runs --------------------------------------

def test_criterion_8_pipeline_determinism(tmp_path):
    def config(out_dir, jobs):
        return config_from_dict(
            {
                "k": 2,
                "metric": "jaccard",
                "master_seed": 424242,
                "output_dir": str(out_dir),
                "parallelism": jobs,
                "rules": ["av", "pav", "cc", "seq_phragmen", "equal_shares", "minimax_av"],
                "cultures": [
                    {"name": "resampling", "kind": "resampling", "m": 10, "n": 12,
                     "count": 5, "p": 0.3, "phi": "sweep"},
                    {"name": "party_list", "kind": "party_list", "m": 10, "n": 12,
                     "count": 4, "g": 5, "alpha": 0.2},
                ],
            }
        )

    run_experiment(config(tmp_path / "one", jobs=1))
    run_experiment(config(tmp_path / "two", jobs=2))
    compared = 0
    for path in sorted(glob.glob(str(tmp_path / "one" / "**" / "*"), recursive=True)):
        if os.path.isdir(path) or not path.endswith((".csv", ".jsonl", ".svg", ".md")):
            continue
        twin = path.replace(str(tmp_path / "one"), str(tmp_path / "two"))
        with open(path, "rb") as fa, open(twin, "rb") as fb:
            assert fa.read() == fb.read(), f"output differs: {os.path.basename(path)}"
        compared += 1
    assert compared >= 9
    report(
        "ACCEPTANCE 8 determinism: PASS "
        f"({compared} CSV/JSONL/SVG/MD artifacts byte-identical across --jobs 1 vs 2)"
    )
