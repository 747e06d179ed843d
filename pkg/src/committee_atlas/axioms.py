"""Representation-axiom audits: JR, PJR, EJR, and priceability.

Every verdict is machine-checkable. A JR/PJR/EJR violation comes with a
cohesive-group witness that re-verifies by direct counting; a priceability
verdict comes with a price system that re-verifies all four conditions in
exact arithmetic. Group-size thresholds compare against l*n/k as exact
rationals, so boundary cases never depend on rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations

from .core import Committee, Election
from .lp import find_feasible_point

__all__ = [
    "Axiom",
    "AxiomVerdict",
    "CohesiveWitness",
    "PriceSystem",
    "axiom_profile",
    "check_ejr",
    "check_jr",
    "check_pjr",
    "check_priceability",
    "find_cohesive_group",
    "verify_price_system",
    "verify_violation",
]


class Axiom(Enum):
    JR = "jr"
    PJR = "pjr"
    EJR = "ejr"
    PRICEABLE = "priceability"


@dataclass(frozen=True)
class CohesiveWitness:
    """ell candidates jointly approved by a voter group of size >= ell*n/k."""

    ell: int
    candidates: frozenset[int]
    voters: frozenset[int]

    def to_json(self) -> dict:
        return {
            "ell": self.ell,
            "candidates": sorted(self.candidates),
            "voters": sorted(self.voters),
        }


@dataclass(frozen=True)
class PriceSystem:
    """Per-voter budget and payments witnessing priceability."""

    budget: Fraction
    payments: dict[tuple[int, int], Fraction]

    def spent(self, voter: int) -> Fraction:
        return sum(
            (pay for (v, _), pay in self.payments.items() if v == voter), Fraction(0)
        )

    def to_json(self) -> dict:
        return {
            "budget": str(self.budget),
            "payments": [
                [v, c, str(pay)] for (v, c), pay in sorted(self.payments.items()) if pay
            ],
        }


@dataclass(frozen=True)
class AxiomVerdict:
    axiom: Axiom
    holds: bool
    witness: CohesiveWitness | PriceSystem | None = None

    def to_json(self) -> dict:
        obj: dict = {"axiom": self.axiom.value, "holds": self.holds}
        if self.witness is not None:
            obj["witness"] = self.witness.to_json()
        return obj


def find_cohesive_group(
    e: Election,
    eligible: frozenset[int],
    ell: int,
    threshold: Fraction,
) -> CohesiveWitness | None:
    """Some ell-set of candidates jointly approved by >= threshold eligible
    voters, or None.

    Depth-first over candidates ordered by descending support within the
    eligible set, pruning when the running intersection drops below the
    threshold or too few candidates remain.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    eligible_mask = 0
    for v in eligible:
        eligible_mask |= 1 << v
    pool = []
    for c in range(e.m):
        mask = e.approver_masks[c] & eligible_mask
        if mask.bit_count() >= threshold:
            pool.append((c, mask))
    pool.sort(key=lambda item: -item[1].bit_count())
    if len(pool) < ell:
        return None

    chosen: list[int] = []

    def dfs(start: int, inter: int) -> CohesiveWitness | None:
        if len(chosen) == ell:
            group = frozenset(v for v in range(e.n) if inter >> v & 1)
            return CohesiveWitness(ell, frozenset(chosen), group)
        if len(pool) - start < ell - len(chosen):
            return None
        for idx in range(start, len(pool)):
            c, mask = pool[idx]
            nxt = inter & mask
            if nxt.bit_count() < threshold:
                continue
            chosen.append(c)
            found = dfs(idx + 1, nxt)
            if found is not None:
                return found
            chosen.pop()
        return None

    return dfs(0, (1 << e.n) - 1)


def _committee_mask(committee: Committee) -> int:
    mask = 0
    for c in committee:
        mask |= 1 << c
    return mask


def check_jr(e: Election, committee: Committee) -> AxiomVerdict:
    """Violated iff some candidate has >= n/k approvers none of whom approve
    any committee member."""
    committee.validate_for(e)
    k = committee.k
    wmask = _committee_mask(committee)
    uncovered = 0
    for v, ballot_mask in enumerate(e.ballot_masks):
        if ballot_mask & wmask == 0:
            uncovered |= 1 << v
    threshold = Fraction(e.n, k)
    for c in range(e.m):
        group = e.approver_masks[c] & uncovered
        if group.bit_count() >= threshold:
            voters = frozenset(v for v in range(e.n) if group >> v & 1)
            witness = CohesiveWitness(1, frozenset({c}), voters)
            return AxiomVerdict(Axiom.JR, False, witness)
    return AxiomVerdict(Axiom.JR, True)


def check_ejr(e: Election, committee: Committee) -> AxiomVerdict:
    """For each l, search for an l-cohesive group among voters approving
    fewer than l committee members. Restricting to those voters is complete:
    every member of a violating group is such a voter."""
    committee.validate_for(e)
    k = committee.k
    wmask = _committee_mask(committee)
    hits = [(bm & wmask).bit_count() for bm in e.ballot_masks]
    for ell in range(1, k + 1):
        eligible = frozenset(v for v in range(e.n) if hits[v] < ell)
        witness = find_cohesive_group(e, eligible, ell, Fraction(ell * e.n, k))
        if witness is not None:
            return AxiomVerdict(Axiom.EJR, False, witness)
    return AxiomVerdict(Axiom.EJR, True)


def check_pjr(e: Election, committee: Committee) -> AxiomVerdict:
    """For each l and each (l-1)-subset S of the committee, search for an
    l-cohesive group among voters whose committee approvals lie inside S.

    Sound: such a group's committee-approval union fits in S, so it has
    fewer than l committee members. Complete: a violating group's union has
    at most l-1 members and extends to some such S.
    """
    committee.validate_for(e)
    k = committee.k
    wmask = _committee_mask(committee)
    for ell in range(1, k + 1):
        threshold = Fraction(ell * e.n, k)
        for subset in combinations(committee.members, ell - 1):
            smask = 0
            for c in subset:
                smask |= 1 << c
            eligible = frozenset(
                v for v, bm in enumerate(e.ballot_masks) if (bm & wmask & ~smask) == 0
            )
            witness = find_cohesive_group(e, eligible, ell, threshold)
            if witness is not None:
                return AxiomVerdict(Axiom.PJR, False, witness)
    return AxiomVerdict(Axiom.PJR, True)


def verify_violation(e: Election, committee: Committee, axiom: Axiom, w: CohesiveWitness) -> bool:
    """Re-check a violation witness against the raw definition by counting."""
    if len(w.candidates) != w.ell or not w.voters:
        return False
    if len(w.voters) < Fraction(w.ell * e.n, committee.k):
        return False
    for v in w.voters:
        if not w.candidates <= e.approvals[v]:
            return False
    wset = set(committee.members)
    if axiom is Axiom.EJR:
        return all(len(e.approvals[v] & wset) < w.ell for v in w.voters)
    if axiom in (Axiom.PJR, Axiom.JR):
        union: set[int] = set()
        for v in w.voters:
            union |= e.approvals[v] & wset
        return len(union) < w.ell
    raise ValueError(f"{axiom} has no violation witness")


def verify_price_system(e: Election, committee: Committee, ps: PriceSystem) -> bool:
    """All four priceability conditions, checked exactly."""
    if ps.budget < 0:
        return False
    wset = set(committee.members)
    spent = [Fraction(0)] * e.n
    received = {c: Fraction(0) for c in wset}
    for (v, c), pay in ps.payments.items():
        if pay < 0:
            return False
        if c not in e.approvals[v]:
            return False  # voters pay only candidates they approve
        if c not in wset:
            if pay != 0:
                return False  # payments only for committee members
            continue
        spent[v] += pay
        received[c] += pay
    if any(s > ps.budget for s in spent):
        return False
    if any(received[c] != 1 for c in wset):
        return False
    for c in range(e.m):
        if c in wset:
            continue
        leftover = sum((ps.budget - spent[v] for v in e.approver_sets[c]), Fraction(0))
        if leftover > 1:
            return False
    return True


def _restricted_phragmen_system(
    e: Election, members: tuple[int, ...]
) -> PriceSystem | None:
    """Price candidates of the committee in Phragmen order (min next load)."""
    loads = [Fraction(0)] * e.n
    payments: dict[tuple[int, int], Fraction] = {}
    todo = set(members)
    for _ in range(len(members)):
        best_c = -1
        best_load: Fraction | None = None
        for c in sorted(todo):
            sup = e.approver_sets[c]
            if not sup:
                return None
            load = (1 + sum((loads[v] for v in sup), Fraction(0))) / len(sup)
            if best_load is None or load < best_load:
                best_c, best_load = c, load
        for v in e.approver_sets[best_c]:
            payments[(v, best_c)] = best_load - loads[v]
            loads[v] = best_load
        todo.discard(best_c)
    return PriceSystem(max(loads), payments)


def _restricted_equal_shares_system(
    e: Election, members: tuple[int, ...], k: int
) -> PriceSystem | None:
    """Buy the committee with per-voter budget k/n, cheapest rho first, then
    price the remainder Phragmen-style on top of the spending."""
    n = e.n
    budget = [Fraction(k, n)] * n
    payments: dict[tuple[int, int], Fraction] = {}
    todo = set(members)
    progress = True
    while todo and progress:
        progress = False
        best_c = -1
        best_rho: Fraction | None = None
        for c in sorted(todo):
            sup = e.approver_sets[c]
            if not sup or sum((budget[v] for v in sup), Fraction(0)) < 1:
                continue
            ordered = sorted(budget[v] for v in sup)
            prefix = Fraction(0)
            rho = None
            for t, low in enumerate(ordered):
                cap = (1 - prefix) / (len(ordered) - t)
                if cap <= low:
                    rho = cap
                    break
                prefix += low
            if rho is not None and (best_rho is None or rho < best_rho):
                best_c, best_rho = c, rho
        if best_c >= 0:
            for v in e.approver_sets[best_c]:
                pay = min(budget[v], best_rho)
                budget[v] -= pay
                payments[(v, best_c)] = pay
            todo.discard(best_c)
            progress = True
    spending = [Fraction(k, n) - b for b in budget]
    if todo:
        loads = list(spending)
        for c in sorted(todo):
            sup = e.approver_sets[c]
            if not sup:
                return None
        remaining = sorted(todo)
        while remaining:
            best_c = -1
            best_load: Fraction | None = None
            for c in remaining:
                sup = e.approver_sets[c]
                load = (1 + sum((loads[v] for v in sup), Fraction(0))) / len(sup)
                if best_load is None or load < best_load:
                    best_c, best_load = c, load
            for v in e.approver_sets[best_c]:
                payments[(v, best_c)] = best_load - loads[v]
                loads[v] = best_load
            remaining.remove(best_c)
        return PriceSystem(max(loads), payments)
    return PriceSystem(max(spending), payments)


def check_priceability(e: Election, committee: Committee) -> AxiomVerdict:
    """Decide whether some budget and payment scheme prices the committee.

    Cheap certificates run first: a member nobody approves, or a non-member
    whose uncovered supporters alone hold more than one unit of budget, both
    rule priceability out; Phragmen-style and Equal-Shares-style payment
    constructions rule it in when they verify. Otherwise exact LP
    feasibility over the rationals decides.
    """
    committee.validate_for(e)
    k = committee.k
    n = e.n
    wset = set(committee.members)
    if any(not e.approver_sets[c] for c in wset):
        return AxiomVerdict(Axiom.PRICEABLE, False)

    wmask = _committee_mask(committee)
    uncovered = 0
    for v, bm in enumerate(e.ballot_masks):
        if bm & wmask == 0:
            uncovered |= 1 << v
    for c in range(e.m):
        if c in wset:
            continue
        # uncovered supporters spend nothing, keeping a full budget b >= k/n each
        if (e.approver_masks[c] & uncovered).bit_count() * k > n:
            return AxiomVerdict(Axiom.PRICEABLE, False)

    for attempt in (
        _restricted_phragmen_system(e, committee.members),
        _restricted_equal_shares_system(e, committee.members, k),
    ):
        if attempt is not None and verify_price_system(e, committee, attempt):
            return AxiomVerdict(Axiom.PRICEABLE, True, attempt)

    system = _priceability_lp(e, committee)
    if system is None:
        return AxiomVerdict(Axiom.PRICEABLE, False)
    assert verify_price_system(e, committee, system), "LP returned an invalid price system"
    return AxiomVerdict(Axiom.PRICEABLE, True, system)


def _priceability_lp(e: Election, committee: Committee) -> PriceSystem | None:
    """LP feasibility in the budget and per-ballot-class payments.

    Voters sharing a ballot are merged; averaging any valid per-voter system
    over a class keeps it valid, so class-level totals lose nothing.
    """
    wset = set(committee.members)
    classes: dict[frozenset[int], list[int]] = {}
    for v, ballot in enumerate(e.approvals):
        classes.setdefault(ballot, []).append(v)
    ballots = sorted(classes, key=lambda b: classes[b][0])

    var_of: dict[tuple[int, int], int] = {}  # (class index, candidate) -> LP var
    nvars = 1  # var 0 is the budget b
    for ci, ballot in enumerate(ballots):
        for c in sorted(ballot & wset):
            var_of[(ci, c)] = nvars
            nvars += 1

    leq: list[tuple[dict[int, Fraction], Fraction]] = []
    eqs: list[tuple[dict[int, Fraction], Fraction]] = []
    for ci, ballot in enumerate(ballots):
        mu = len(classes[ballot])
        pay_vars = [var_of[(ci, c)] for c in sorted(ballot & wset)]
        if pay_vars:
            row = {j: Fraction(1) for j in pay_vars}
            row[0] = Fraction(-mu)
            leq.append((row, Fraction(0)))
    for c in sorted(wset):
        row = {}
        for ci, ballot in enumerate(ballots):
            if c in ballot:
                row[var_of[(ci, c)]] = Fraction(1)
        eqs.append((row, Fraction(1)))
    for c in range(e.m):
        if c in wset or not e.approver_sets[c]:
            continue
        row: dict[int, Fraction] = {0: Fraction(0)}
        for ci, ballot in enumerate(ballots):
            if c not in ballot:
                continue
            mu = len(classes[ballot])
            row[0] += mu
            for cprime in sorted(ballot & wset):
                j = var_of[(ci, cprime)]
                row[j] = row.get(j, Fraction(0)) - 1
        leq.append((row, Fraction(1)))

    solution = find_feasible_point(nvars, leq, eqs)
    if solution is None:
        return None
    payments: dict[tuple[int, int], Fraction] = {}
    for (ci, c), j in var_of.items():
        share = solution[j] / len(classes[ballots[ci]])
        for v in classes[ballots[ci]]:
            payments[(v, c)] = share
    return PriceSystem(solution[0], payments)


def axiom_profile(e: Election, committee: Committee) -> dict[Axiom, AxiomVerdict]:
    """All four verdicts, with the implication chain asserted as a bug trap."""
    verdicts = {
        Axiom.JR: check_jr(e, committee),
        Axiom.PJR: check_pjr(e, committee),
        Axiom.EJR: check_ejr(e, committee),
        Axiom.PRICEABLE: check_priceability(e, committee),
    }
    if verdicts[Axiom.EJR].holds:
        assert verdicts[Axiom.PJR].holds, "EJR held but PJR failed"
    if verdicts[Axiom.PJR].holds:
        assert verdicts[Axiom.JR].holds, "PJR held but JR failed"
    if verdicts[Axiom.PRICEABLE].holds:
        assert verdicts[Axiom.PJR].holds, "priceable but PJR failed"
    return verdicts
