"""Approval election data model and candidate-level distances.

Elections are immutable: ``n`` voters hold approval sets over ``m``
candidates, both identified by dense 0-based indices. All distances are
computed in exact rational arithmetic (:class:`fractions.Fraction`);
conversion to floating point happens only when results are serialized.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)

__all__ = [
    "CandidateMetric",
    "Committee",
    "Election",
    "approvers",
    "candidate_distance",
    "election_from_json",
    "election_to_json",
    "read_elections_jsonl",
    "write_elections_jsonl",
]


class CandidateMetric(Enum):
    """Pairwise candidate distance: which voters approve whom is all that counts."""

    DISCRETE = "discrete"
    HAMMING = "hamming"
    NORMALIZED_HAMMING = "normalized_hamming"
    JACCARD = "jaccard"

    @classmethod
    def from_string(cls, name: str) -> "CandidateMetric":
        try:
            return cls(name.strip().lower())
        except ValueError:
            options = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown candidate metric {name!r}; expected one of: {options}")


@dataclass(frozen=True)
class Election:
    """An approval election: ``m`` candidates, ``n`` voters, one approval set per voter.

    Parameters
    ----------
    m : int
        Number of candidates; candidates are the indices ``0..m-1``.
    approvals : tuple of frozenset of int
        One approval set per voter. May be empty unless an operation's
        precondition forbids it.
    labels : tuple of str, optional
        External candidate names, purely cosmetic.
    """

    m: int
    approvals: tuple[frozenset[int], ...]
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one candidate")
        if len(self.approvals) < 1:
            raise ValueError("need at least one voter")
        for i, ballot in enumerate(self.approvals):
            for c in ballot:
                if not 0 <= c < self.m:
                    raise ValueError(f"voter {i} approves candidate {c} outside 0..{self.m - 1}")
        if self.labels is not None and len(self.labels) != self.m:
            raise ValueError("labels must name every candidate")

    @classmethod
    def from_approvals(
        cls,
        m: int,
        approvals: Iterable[Iterable[int]],
        labels: Sequence[str] | None = None,
    ) -> "Election":
        return cls(
            m=m,
            approvals=tuple(frozenset(b) for b in approvals),
            labels=tuple(labels) if labels is not None else None,
        )

    @property
    def n(self) -> int:
        return len(self.approvals)

    @cached_property
    def approver_sets(self) -> tuple[frozenset[int], ...]:
        """For each candidate, the set of voters approving it."""
        acc: list[set[int]] = [set() for _ in range(self.m)]
        for v, ballot in enumerate(self.approvals):
            for c in ballot:
                acc[c].add(v)
        return tuple(frozenset(s) for s in acc)

    @cached_property
    def approver_masks(self) -> tuple[int, ...]:
        """Per-candidate voter bitmask (bit v set iff voter v approves)."""
        masks = [0] * self.m
        for v, ballot in enumerate(self.approvals):
            bit = 1 << v
            for c in ballot:
                masks[c] |= bit
        return tuple(masks)

    @cached_property
    def ballot_masks(self) -> tuple[int, ...]:
        """Per-voter candidate bitmask (bit c set iff the voter approves c)."""
        out = []
        for ballot in self.approvals:
            mask = 0
            for c in ballot:
                mask |= 1 << c
            out.append(mask)
        return tuple(out)


@dataclass(frozen=True, order=True)
class Committee:
    """A fixed-size candidate subset, stored as a strictly increasing index tuple."""

    members: tuple[int, ...]

    def __post_init__(self):
        for a, b in zip(self.members, self.members[1:]):
            if a >= b:
                raise ValueError("committee members must be strictly increasing")
        if self.members and self.members[0] < 0:
            raise ValueError("negative candidate index")

    @classmethod
    def of(cls, members: Iterable[int]) -> "Committee":
        return cls(tuple(sorted(set(members))))

    @property
    def k(self) -> int:
        return len(self.members)

    def __contains__(self, c: int) -> bool:
        return c in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def validate_for(self, e: Election) -> None:
        if self.members and self.members[-1] >= e.m:
            raise ValueError(f"member {self.members[-1]} outside candidate range 0..{e.m - 1}")


def approvers(e: Election, c: int) -> frozenset[int]:
    """Voters approving candidate ``c``."""
    if not 0 <= c < e.m:
        raise IndexError(f"candidate {c} outside 0..{e.m - 1}")
    return e.approver_sets[c]


def candidate_distance(e: Election, metric: CandidateMetric, c: int, d: int) -> Fraction:
    """Exact distance between candidates ``c`` and ``d`` under ``metric``.

    Two candidates with empty approver sets are at Jaccard distance 0
    (identical sets); this degenerate case is logged since the Jaccard
    quotient is otherwise undefined.
    """
    if not 0 <= c < e.m:
        raise IndexError(f"candidate {c} outside 0..{e.m - 1}")
    if not 0 <= d < e.m:
        raise IndexError(f"candidate {d} outside 0..{e.m - 1}")
    if metric is CandidateMetric.DISCRETE:
        return Fraction(0) if c == d else Fraction(1)
    ac = e.approver_masks[c]
    ad = e.approver_masks[d]
    ham = (ac ^ ad).bit_count()
    if metric is CandidateMetric.HAMMING:
        return Fraction(ham)
    if metric is CandidateMetric.NORMALIZED_HAMMING:
        return Fraction(ham, e.n)
    union = (ac | ad).bit_count()
    if union == 0:
        logger.warning(
            "jaccard distance between candidates %d and %d with no approvers; using 0", c, d
        )
        return Fraction(0)
    return Fraction(ham, union)


def election_to_json(e: Election) -> dict:
    """JSON object for the one-election-per-line file format."""
    obj: dict = {
        "m": e.m,
        "n": e.n,
        "approvals": [sorted(ballot) for ballot in e.approvals],
    }
    if e.labels is not None:
        obj["labels"] = list(e.labels)
    return obj


def election_from_json(obj: dict) -> Election:
    """Inverse of :func:`election_to_json`; unknown keys are ignored."""
    try:
        m = int(obj["m"])
        approvals = obj["approvals"]
    except KeyError as err:
        raise ValueError(f"election object missing field {err}")
    e = Election.from_approvals(m, approvals, labels=obj.get("labels"))
    if "n" in obj and int(obj["n"]) != e.n:
        raise ValueError(f"declared n={obj['n']} but found {e.n} approval sets")
    return e


def write_elections_jsonl(path, elections: Iterable[Election]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in elections:
            fh.write(json.dumps(election_to_json(e), separators=(",", ":")) + "\n")


def read_elections_jsonl(path) -> list[Election]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(election_from_json(json.loads(line)))
    return out
