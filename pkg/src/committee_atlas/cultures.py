"""Synthetic election sampling and participatory-budgeting file ingestion.

Reproducibility contract: all samplers draw from a numpy PCG64 generator.
A batch derives the generator for instance ``i`` of a named culture as

    PCG64(SeedSequence([master_seed, *digest32(culture_name), i]))

where ``digest32`` is the first four 32-bit words of blake2b(name). Identical
(spec, seed) pairs therefore produce bit-identical elections, and each
instance is a pure function of (master seed, culture, index).

Fractional parameters that scale candidate counts (``p``, ``alpha``) are
interpreted through ``Fraction(str(x))``, so floor(p*m) means the written
decimal times m, never a float artifact.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import Election

__all__ = [
    "CultureSpec",
    "PabulibInstance",
    "PabulibParseError",
    "derive_rng",
    "eligible_for_sampling",
    "parse_pabulib",
    "sample_disjoint",
    "sample_euclidean",
    "sample_party_list",
    "sample_pabulib",
    "sample_resampling",
    "serialize_pabulib",
]


def _digest32(name: str) -> list[int]:
    raw = hashlib.blake2b(name.encode("utf-8"), digest_size=16).digest()
    return [int.from_bytes(raw[i : i + 4], "little") for i in range(0, 16, 4)]


def derive_rng(master_seed: int, culture_name: str, index: int) -> np.random.Generator:
    """The documented stream-splitting rule for batch generation."""
    seq = np.random.SeedSequence([int(master_seed), *_digest32(culture_name), int(index)])
    return np.random.Generator(np.random.PCG64(seq))


def _floor_times(x, m: int) -> int:
    """floor(x * m) with x read as the decimal literally written."""
    return math.floor(Fraction(str(x)) * m)


def _election_from_matrix(approves: np.ndarray, m: int) -> Election:
    return Election.from_approvals(
        m, (frozenset(np.flatnonzero(row).tolist()) for row in approves)
    )


def sample_resampling(m: int, n: int, p, phi, rng: np.random.Generator) -> Election:
    """Resampling culture: a central ballot of floor(p*m) candidates; each
    vote keeps a candidate's central status with probability 1-phi and
    otherwise re-approves it independently with probability p.

    Draw order: candidate permutation, then the n x m resample mask, then the
    n x m re-approval mask.
    """
    _check_prob("p", p)
    _check_prob("phi", phi)
    size = _floor_times(p, m)
    perm = rng.permutation(m)
    central = np.zeros(m, dtype=bool)
    central[perm[:size]] = True
    resample = rng.random((n, m)) < float(phi)
    fresh = rng.random((n, m)) < float(p)
    approves = np.where(resample, fresh, central)
    return _election_from_matrix(approves, m)


def sample_disjoint(m: int, n: int, p, phi, g: int, rng: np.random.Generator) -> Election:
    """Disjoint culture: g pairwise-disjoint central ballots; every vote picks
    one uniformly and perturbs it as in the resampling culture.

    With g=1 the generator stream matches sample_resampling exactly (the
    ballot selector draw is skipped), so the two cultures coincide bit for
    bit, not just in distribution.
    """
    _check_prob("p", p)
    _check_prob("phi", phi)
    if g < 1:
        raise ValueError("need at least one central ballot")
    size = _floor_times(p, m)
    if g * size > m:
        raise ValueError(f"cannot fit {g} disjoint ballots of {size} candidates into {m}")
    perm = rng.permutation(m)
    centrals = np.zeros((g, m), dtype=bool)
    for block in range(g):
        centrals[block, perm[block * size : (block + 1) * size]] = True
    if g == 1:
        pick = np.zeros(n, dtype=np.int64)
    else:
        pick = rng.integers(0, g, size=n)
    resample = rng.random((n, m)) < float(phi)
    fresh = rng.random((n, m)) < float(p)
    approves = np.where(resample, fresh, centrals[pick])
    return _election_from_matrix(approves, m)


def _euclidean_approvals(voters: np.ndarray, cands: np.ndarray, r: float) -> np.ndarray:
    diff = voters[:, None, :] - cands[None, :, :]
    return (diff * diff).sum(axis=2) <= r * r


def sample_euclidean(
    m: int, n: int, dim: int, r, rng: np.random.Generator, return_points: bool = False
):
    """Spatial culture: voter and candidate ideal points uniform in the unit
    cube; a voter approves every candidate within radius r.

    Draw order: voter points, then candidate points. With return_points the
    sampled coordinates come back alongside the election.
    """
    if dim not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    if not float(r) > 0:
        raise ValueError("radius must be positive")
    voters = rng.random((n, dim))
    cands = rng.random((m, dim))
    election = _election_from_matrix(_euclidean_approvals(voters, cands, float(r)), m)
    if return_points:
        return election, voters, cands
    return election


def sample_party_list(m: int, n: int, g: int, alpha, rng: np.random.Generator) -> Election:
    """Urn culture over party ballots: g parties of floor(m/g) consecutive
    candidates; drawing a vote returns it to the urn with floor(alpha*g)
    extra copies. Leftover candidates (m mod g) are never approved.
    """
    if g < 1 or g > m:
        raise ValueError("need 1 <= g <= m parties")
    if Fraction(str(alpha)) < 0:
        raise ValueError("alpha must be nonnegative")
    size = m // g
    reinforce = _floor_times(alpha, g)
    parties = [frozenset(range(b * size, (b + 1) * size)) for b in range(g)]
    counts = [1] * g
    total = g
    approvals = []
    for _ in range(n):
        ticket = int(rng.integers(0, total))
        party = 0
        while ticket >= counts[party]:
            ticket -= counts[party]
            party += 1
        approvals.append(parties[party])
        counts[party] += reinforce
        total += reinforce
    return Election.from_approvals(m, approvals)


def _check_prob(name: str, value) -> None:
    if not 0 <= float(value) <= 1:
        raise ValueError(f"{name} must lie in [0, 1]")


# --- participatory-budgeting files ---------------------------------------

_SECTIONS = ("META", "PROJECTS", "VOTES")


class PabulibParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class PabulibInstance:
    """A lossless view of one .pb file.

    ``votes`` maps voter ids to approval sets of project ids; ordinal ballots
    count every ranked project as approved. Raw headers and rows are kept so
    files round-trip byte for byte.
    """

    meta: dict[str, str]
    projects: list[str]
    votes: dict[str, frozenset[str]]
    project_header: list[str] = field(default_factory=lambda: ["project_id"])
    project_rows: list[list[str]] = field(default_factory=list)
    vote_header: list[str] = field(default_factory=lambda: ["voter_id", "vote"])
    vote_rows: list[list[str]] = field(default_factory=list)

    @property
    def num_projects(self) -> int:
        return len(self.projects)

    @property
    def num_voters(self) -> int:
        return len(self.votes)

    def mean_ballot_size(self) -> Fraction:
        if not self.votes:
            return Fraction(0)
        return Fraction(sum(len(v) for v in self.votes.values()), len(self.votes))


def parse_pabulib(text: str) -> PabulibInstance:
    """Parse META / PROJECTS / VOTES sections of a .pb file.

    Raises PabulibParseError (with a 1-based line number) on unknown section
    names, missing required columns, or votes naming undeclared projects.
    """
    meta: dict[str, str] = {}
    section = None
    header: list[str] | None = None
    project_header: list[str] | None = None
    project_rows: list[list[str]] = []
    vote_header: list[str] | None = None
    vote_rows: list[list[str]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n\r")
        if not line.strip():
            continue
        token = line.strip()
        looks_like_section = ";" not in token and token.isupper() and token.isalpha()
        if looks_like_section:
            if token not in _SECTIONS:
                raise PabulibParseError(f"unknown section {token!r}", lineno)
            section = token
            header = None
            continue
        if section is None:
            raise PabulibParseError("content before any section line", lineno)
        cells = line.split(";")
        if section == "META":
            if len(cells) < 2:
                raise PabulibParseError("META rows need key;value", lineno)
            meta[cells[0]] = ";".join(cells[1:])
            continue
        if header is None:
            header = cells
            if section == "PROJECTS":
                if "project_id" not in header:
                    raise PabulibParseError("PROJECTS header lacks project_id", lineno)
                project_header = header
            else:
                if "voter_id" not in header or "vote" not in header:
                    raise PabulibParseError("VOTES header lacks voter_id or vote", lineno)
                vote_header = header
            continue
        if len(cells) != len(header):
            raise PabulibParseError(
                f"expected {len(header)} fields, found {len(cells)}", lineno
            )
        if section == "PROJECTS":
            project_rows.append(cells)
        else:
            vote_rows.append((lineno, cells))  # keep line for reference checks

    projects: list[str] = []
    if project_header is not None:
        idx = project_header.index("project_id")
        projects = [row[idx] for row in project_rows]
    declared = set(projects)

    votes: dict[str, frozenset[str]] = {}
    clean_vote_rows: list[list[str]] = []
    if vote_header is not None:
        vid_idx = vote_header.index("voter_id")
        vote_idx = vote_header.index("vote")
        for lineno, row in vote_rows:
            ballot_field = row[vote_idx].strip()
            ballot = [x.strip() for x in ballot_field.split(",") if x.strip()] if ballot_field else []
            for proj in ballot:
                if proj not in declared:
                    raise PabulibParseError(f"vote names unknown project {proj!r}", lineno)
            votes[row[vid_idx]] = frozenset(ballot)
            clean_vote_rows.append(row)

    return PabulibInstance(
        meta=meta,
        projects=projects,
        votes=votes,
        project_header=project_header or ["project_id"],
        project_rows=project_rows,
        vote_header=vote_header or ["voter_id", "vote"],
        vote_rows=clean_vote_rows,
    )


def serialize_pabulib(inst: PabulibInstance) -> str:
    lines = ["META"]
    lines += [f"{k};{v}" for k, v in inst.meta.items()]
    lines.append("PROJECTS")
    lines.append(";".join(inst.project_header))
    lines += [";".join(row) for row in inst.project_rows]
    lines.append("VOTES")
    lines.append(";".join(inst.vote_header))
    lines += [";".join(row) for row in inst.vote_rows]
    return "\n".join(lines) + "\n"


def eligible_for_sampling(
    inst: PabulibInstance,
    min_candidates: int = 100,
    min_voters: int = 100,
    min_mean_approvals: int = 3,
) -> bool:
    """The instance-pool filter: enough projects and voters, ballots not too thin."""
    return (
        inst.num_projects >= min_candidates
        and inst.num_voters >= min_voters
        and inst.mean_ballot_size() >= min_mean_approvals
    )


def sample_pabulib(
    instances: list[PabulibInstance],
    rng: np.random.Generator,
    m_target: int = 100,
    n_target: int = 100,
) -> Election:
    """One election resampled from real data: a uniform instance, a uniform
    m_target-subset of its projects, a uniform n_target-subset of its voters,
    dropping voters whose restricted ballot comes out empty.

    Draw order: instance index, project permutation, voter permutation.
    """
    if not instances:
        raise ValueError("empty instance pool")
    inst = instances[int(rng.integers(0, len(instances)))]
    if inst.num_projects < m_target or inst.num_voters < n_target:
        raise ValueError("instance too small for the requested sample; filter the pool first")
    proj_perm = rng.permutation(inst.num_projects)
    chosen_positions = sorted(int(i) for i in proj_perm[:m_target])
    chosen_ids = [inst.projects[i] for i in chosen_positions]
    new_index = {pid: j for j, pid in enumerate(chosen_ids)}
    voter_ids = list(inst.votes.keys())
    voter_perm = rng.permutation(len(voter_ids))
    ballots = []
    for vi in voter_perm[:n_target]:
        ballot = inst.votes[voter_ids[int(vi)]]
        restricted = frozenset(new_index[pid] for pid in ballot if pid in new_index)
        if restricted:
            ballots.append(restricted)
    return Election.from_approvals(m_target, ballots, labels=chosen_ids)


# --- declarative specs -----------------------------------------------------

_KINDS = ("resampling", "disjoint", "euclidean", "party_list", "pabulib")


@dataclass(frozen=True)
class CultureSpec:
    """One sampleable election distribution, seed included.

    Field use by kind: resampling(p, phi), disjoint(p, phi, g),
    euclidean(dim, r), party_list(g, alpha), pabulib(source files provided at
    sampling time).
    """

    kind: str
    m: int
    n: int
    seed: int
    p: float | None = None
    phi: float | None = None
    g: int | None = None
    r: float | None = None
    dim: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown culture kind {self.kind!r}")
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        needs = {
            "resampling": ("p", "phi"),
            "disjoint": ("p", "phi", "g"),
            "euclidean": ("dim", "r"),
            "party_list": ("g", "alpha"),
            "pabulib": (),
        }[self.kind]
        for name in needs:
            if getattr(self, name) is None:
                raise ValueError(f"{self.kind} culture needs parameter {name!r}")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed])))

    def sample(self, rng: np.random.Generator | None = None,
               pabulib_pool: list[PabulibInstance] | None = None) -> Election:
        rng = rng if rng is not None else self.rng()
        if self.kind == "resampling":
            return sample_resampling(self.m, self.n, self.p, self.phi, rng)
        if self.kind == "disjoint":
            return sample_disjoint(self.m, self.n, self.p, self.phi, self.g, rng)
        if self.kind == "euclidean":
            return sample_euclidean(self.m, self.n, self.dim, self.r, rng)
        if self.kind == "party_list":
            return sample_party_list(self.m, self.n, self.g, self.alpha, rng)
        if pabulib_pool is None:
            raise ValueError("pabulib sampling needs an instance pool")
        return sample_pabulib(pabulib_pool, rng, m_target=self.m, n_target=self.n)

    def to_json(self) -> dict:
        obj: dict = {"kind": self.kind, "m": self.m, "n": self.n, "seed": self.seed}
        for name in ("p", "phi", "g", "r", "dim", "alpha"):
            value = getattr(self, name)
            if value is not None:
                obj[name] = value
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "CultureSpec":
        known = {k: obj[k] for k in ("kind", "m", "n", "seed", "p", "phi", "g", "r", "dim", "alpha") if k in obj}
        return cls(**known)
