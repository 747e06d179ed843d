"""Approval-based multiwinner voting: rules, distances, axiom audits, and maps."""

from .axioms import (
    Axiom,
    AxiomVerdict,
    CohesiveWitness,
    PriceSystem,
    axiom_profile,
    check_ejr,
    check_jr,
    check_pjr,
    check_priceability,
    find_cohesive_group,
)
from .core import (
    CandidateMetric,
    Committee,
    Election,
    approvers,
    candidate_distance,
    read_elections_jsonl,
    write_elections_jsonl,
)
from .cultures import (
    CultureSpec,
    PabulibInstance,
    PabulibParseError,
    parse_pabulib,
    sample_disjoint,
    sample_euclidean,
    sample_pabulib,
    sample_party_list,
    sample_resampling,
    serialize_pabulib,
)
from .farthest import (
    CandidateType,
    FarthestResult,
    WorkBudgetExceeded,
    candidate_types,
    fc_brute_force,
    fc_discrete,
    fc_type_compressed,
)
from .metrics import (
    DistanceMatrix,
    MatchingInstance,
    average_matrices,
    committee_distance,
    min_weight_perfect_matching,
    normalize_by_observed_max,
    pairwise_rule_distances,
)
from .pipeline import (
    AxiomFractionTable,
    CultureConfig,
    Embedding,
    ExperimentConfig,
    axiom_fraction_table,
    embed_stress_min,
    load_config,
    run_experiment,
)
from .rules import (
    RuleId,
    ThieleWeights,
    TieBreak,
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

__version__ = "0.1.0"
