"""End-to-end experiment pipeline: sample, solve, measure, audit, embed, render.

Every artifact is a pure function of the experiment config. Per-instance work
(rule solving, distance matrices, axiom audits) is embarrassingly parallel
and is mapped over a process pool when jobs > 1; aggregation always runs
serially in instance-index order, so outputs are byte-identical regardless
of worker count.

Stage outputs under the configured directory:

    elections.jsonl        one sampled election per line, tagged culture/index
    committees.jsonl       {"culture", "instance", "rule", "members"}
    matrices/<culture>.csv averaged normalized rule-distance matrix
    axioms/<culture>.csv   per-rule fractions: priceability, ejr, pjr, jr
    map/<culture>.svg      rendered rule map (+ .json with coordinates/stress)
    report.md              human-readable summary of the run
"""

from __future__ import annotations

import glob as globmod
import json
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .axioms import Axiom, axiom_profile, find_cohesive_group
from .core import CandidateMetric, Committee, Election, election_from_json, election_to_json
from .cultures import (
    PabulibInstance,
    derive_rng,
    eligible_for_sampling,
    parse_pabulib,
    sample_disjoint,
    sample_euclidean,
    sample_pabulib,
    sample_party_list,
    sample_resampling,
)
from .metrics import (
    DistanceMatrix,
    PerElectionMatrix,
    average_matrices,
    normalize_by_observed_max,
    pairwise_rule_distances,
)
from .rules import RULE_LABELS, RuleId, run_rule

__all__ = [
    "AxiomFractionTable",
    "CultureConfig",
    "Embedding",
    "ExperimentConfig",
    "ExperimentResults",
    "PROPORTIONAL_RULES",
    "axiom_fraction_table",
    "embed_stress_min",
    "load_config",
    "run_experiment",
    "stage_axioms",
    "stage_distances",
    "stage_generate",
    "stage_map",
    "stage_report",
    "stage_solve",
]

AXIOM_COLUMNS = (Axiom.PRICEABLE, Axiom.EJR, Axiom.PJR, Axiom.JR)

PROPORTIONAL_RULES = (
    RuleId.PAV,
    RuleId.SEQ_PAV,
    RuleId.SEQ_PHRAGMEN,
    RuleId.EQUAL_SHARES,
    RuleId.SLAV,
    RuleId.SEQ_SLAV,
    RuleId.GREEDY_MONROE,
)


# --- configuration ---------------------------------------------------------

_CULTURE_KEYS = {
    "name", "kind", "m", "n", "count", "p", "phi", "g", "r", "dim", "alpha",
    "files", "min_candidates", "min_voters", "min_mean_approvals",
}


@dataclass(frozen=True)
class CultureConfig:
    """One culture in an experiment: a sampler plus an instance count.

    ``phi`` may be the string "sweep", giving instance i the disturbance
    i/(count-1) so a batch spans the whole grid from 0 to 1.
    """

    name: str
    kind: str
    m: int
    n: int
    count: int
    p: float | None = None
    phi: float | str | None = None
    g: int | None = None
    r: float | None = None
    dim: int | None = None
    alpha: float | None = None
    files: tuple[str, ...] = ()
    min_candidates: int = 100
    min_voters: int = 100
    min_mean_approvals: int = 3

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"culture {self.name}: need at least one instance")
        if isinstance(self.phi, str) and self.phi != "sweep":
            raise ValueError(f"culture {self.name}: phi must be a number or 'sweep'")
        if self.kind == "pabulib" and not self.files:
            raise ValueError(f"culture {self.name}: pabulib culture needs source files")

    def phi_for(self, index: int) -> float:
        if self.phi == "sweep":
            return index / (self.count - 1) if self.count > 1 else 0.0
        return float(self.phi)

    def sample(
        self,
        master_seed: int,
        index: int,
        pabulib_pool: list[PabulibInstance] | None = None,
    ) -> Election:
        rng = derive_rng(master_seed, self.name, index)
        if self.kind == "resampling":
            return sample_resampling(self.m, self.n, self.p, self.phi_for(index), rng)
        if self.kind == "disjoint":
            return sample_disjoint(self.m, self.n, self.p, self.phi_for(index), self.g, rng)
        if self.kind == "euclidean":
            return sample_euclidean(self.m, self.n, self.dim, self.r, rng)
        if self.kind == "party_list":
            return sample_party_list(self.m, self.n, self.g, self.alpha, rng)
        if self.kind == "pabulib":
            if not pabulib_pool:
                raise ValueError(f"culture {self.name}: no eligible pabulib instances")
            return sample_pabulib(pabulib_pool, rng, m_target=self.m, n_target=self.n)
        raise ValueError(f"unknown culture kind {self.kind!r}")

    def to_json(self) -> dict:
        obj: dict = {"name": self.name, "kind": self.kind, "m": self.m, "n": self.n,
                     "count": self.count}
        for key in ("p", "phi", "g", "r", "dim", "alpha"):
            value = getattr(self, key)
            if value is not None:
                obj[key] = value
        if self.files:
            obj["files"] = list(self.files)
        return obj


_CONFIG_KEYS = {
    "cultures", "rules", "k", "metric", "master_seed", "output_dir",
    "parallelism", "highlight", "embed_max_iters", "report_cohesive_stats",
}


@dataclass(frozen=True)
class ExperimentConfig:
    cultures: tuple[CultureConfig, ...]
    rules: tuple[RuleId, ...]
    k: int
    metric: CandidateMetric = CandidateMetric.JACCARD
    master_seed: int = 0
    output_dir: str = "out"
    parallelism: int = 1
    highlight: tuple[RuleId, ...] = PROPORTIONAL_RULES
    embed_max_iters: int = 1000
    report_cohesive_stats: bool = True
    base_dir: str = "."

    def __post_init__(self):
        if not self.rules:
            raise ValueError("need at least one rule")
        if not self.cultures:
            raise ValueError("need at least one culture")
        names = [c.name for c in self.cultures]
        if len(set(names)) != len(names):
            raise ValueError("culture names must be unique")
        for culture in self.cultures:
            if self.k > culture.m:
                raise ValueError(
                    f"culture {culture.name}: committee size {self.k} exceeds m={culture.m}"
                )

    def out(self, *parts: str) -> str:
        return os.path.join(self.output_dir, *parts)

    def to_json(self) -> dict:
        return {
            "cultures": [c.to_json() for c in self.cultures],
            "rules": [r.value for r in self.rules],
            "k": self.k,
            "metric": self.metric.value,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "parallelism": self.parallelism,
            "highlight": [r.value for r in self.highlight],
            "embed_max_iters": self.embed_max_iters,
            "report_cohesive_stats": self.report_cohesive_stats,
        }


def config_from_dict(obj: Mapping, base_dir: str = ".") -> ExperimentConfig:
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cultures = []
    for raw in obj["cultures"]:
        extra = set(raw) - _CULTURE_KEYS
        if extra:
            raise ValueError(f"unknown culture keys: {sorted(extra)}")
        raw = dict(raw)
        if "files" in raw:
            raw["files"] = tuple(raw["files"])
        cultures.append(CultureConfig(**raw))
    return ExperimentConfig(
        cultures=tuple(cultures),
        rules=tuple(RuleId.from_string(r) for r in obj["rules"]),
        k=int(obj["k"]),
        metric=CandidateMetric.from_string(obj.get("metric", "jaccard")),
        master_seed=int(obj.get("master_seed", 0)),
        output_dir=obj.get("output_dir", "out"),
        parallelism=int(obj.get("parallelism", 1)),
        highlight=tuple(
            RuleId.from_string(r) for r in obj.get("highlight", [r.value for r in PROPORTIONAL_RULES])
        ),
        embed_max_iters=int(obj.get("embed_max_iters", 1000)),
        report_cohesive_stats=bool(obj.get("report_cohesive_stats", True)),
        base_dir=base_dir,
    )


def load_config(path: str, **overrides) -> ExperimentConfig:
    """Read a TOML or JSON config file; keyword overrides win over the file."""
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            obj = tomllib.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    obj.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(obj, base_dir=os.path.dirname(os.path.abspath(path)))


# --- parallel helpers --------------------------------------------------------

def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(item) for item in items]


def _solve_worker(args: tuple) -> tuple:
    culture, index, election, rule_values, k = args
    try:
        committees = {
            rule: run_rule(RuleId(rule), election, k).members for rule in rule_values
        }
        return culture, index, committees, None
    except Exception:
        return culture, index, None, traceback.format_exc()


def _distance_worker(args: tuple) -> PerElectionMatrix:
    election, committees, metric_value, rule_values = args
    mapping = {RuleId(r): Committee(tuple(members)) for r, members in committees.items()}
    ordered = {RuleId(r): mapping[RuleId(r)] for r in rule_values}
    grid = pairwise_rule_distances(election, ordered, CandidateMetric(metric_value))
    return normalize_by_observed_max(grid)


def _axiom_worker(args: tuple) -> dict[str, dict[str, bool]]:
    election, committees = args
    out: dict[str, dict[str, bool]] = {}
    for rule, members in committees.items():
        profile = axiom_profile(election, Committee(tuple(members)))
        out[rule] = {axiom.value: verdict.holds for axiom, verdict in profile.items()}
    return out


def _cohesive_worker(args: tuple) -> bool:
    election, ell, k = args
    witness = find_cohesive_group(
        election,
        frozenset(range(election.n)),
        ell,
        Fraction(ell * election.n, k),
    )
    return witness is not None


# --- stages ------------------------------------------------------------------

def _load_pabulib_pool(cfg: ExperimentConfig, culture: CultureConfig) -> list[PabulibInstance]:
    pool = []
    for pattern in culture.files:
        full = pattern if os.path.isabs(pattern) else os.path.join(cfg.base_dir, pattern)
        for path in sorted(globmod.glob(full)):
            with open(path, "r", encoding="utf-8") as fh:
                inst = parse_pabulib(fh.read())
            if eligible_for_sampling(
                inst,
                min_candidates=culture.min_candidates,
                min_voters=culture.min_voters,
                min_mean_approvals=culture.min_mean_approvals,
            ):
                pool.append(inst)
    return pool


def stage_generate(cfg: ExperimentConfig) -> dict[str, list[Election]]:
    """Sample every instance of every culture and write elections.jsonl."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    elections: dict[str, list[Election]] = {}
    for culture in cfg.cultures:
        pool = _load_pabulib_pool(cfg, culture) if culture.kind == "pabulib" else None
        batch = []
        for i in range(culture.count):
            try:
                batch.append(culture.sample(cfg.master_seed, i, pool))
            except Exception as err:
                raise RuntimeError(
                    f"sampling failed for culture={culture.name} index={i} "
                    f"master_seed={cfg.master_seed}: {err}"
                ) from err
        elections[culture.name] = batch
    with open(cfg.out("elections.jsonl"), "w", encoding="utf-8") as fh:
        for culture in cfg.cultures:
            for i, e in enumerate(elections[culture.name]):
                obj = {"culture": culture.name, "index": i}
                obj.update(election_to_json(e))
                fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
    with open(cfg.out("config.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return elections


def load_elections(cfg: ExperimentConfig) -> dict[str, list[Election]]:
    elections: dict[str, list[Election]] = {c.name: [] for c in cfg.cultures}
    with open(cfg.out("elections.jsonl"), "r", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            elections[obj["culture"]].append(election_from_json(obj))
    for culture in cfg.cultures:
        if len(elections[culture.name]) != culture.count:
            raise ValueError(
                f"elections.jsonl holds {len(elections[culture.name])} instances for "
                f"{culture.name}, expected {culture.count}; rerun generate"
            )
    return elections


def stage_solve(
    cfg: ExperimentConfig, elections: dict[str, list[Election]] | None = None
) -> dict[str, list[dict[RuleId, Committee]]]:
    """Compute the winning committee of every rule on every instance."""
    if elections is None:
        elections = load_elections(cfg)
    rule_values = [r.value for r in cfg.rules]
    tasks = [
        (culture.name, i, elections[culture.name][i], rule_values, cfg.k)
        for culture in cfg.cultures
        for i in range(culture.count)
    ]
    results = _pmap(_solve_worker, tasks, cfg.parallelism)
    solved: dict[str, list[dict[RuleId, Committee]]] = {c.name: [None] * c.count for c in cfg.cultures}
    for culture_name, index, committees, error in results:
        if error is not None:
            replay = cfg.out(f"failed_{culture_name}_{index}.json")
            election = elections[culture_name][index]
            with open(replay, "w", encoding="utf-8") as fh:
                json.dump(election_to_json(election), fh)
            raise RuntimeError(
                f"rule solving failed for culture={culture_name} index={index} "
                f"master_seed={cfg.master_seed}; instance saved to {replay}\n{error}"
            )
        solved[culture_name][index] = {
            RuleId(r): Committee(tuple(members)) for r, members in committees.items()
        }
    with open(cfg.out("committees.jsonl"), "w", encoding="utf-8") as fh:
        for culture in cfg.cultures:
            for i in range(culture.count):
                for rule in cfg.rules:
                    members = list(solved[culture.name][i][rule].members)
                    fh.write(
                        json.dumps(
                            {"culture": culture.name, "instance": i, "rule": rule.value,
                             "members": members},
                            separators=(",", ":"),
                        )
                        + "\n"
                    )
    return solved


def load_committees(cfg: ExperimentConfig) -> dict[str, list[dict[RuleId, Committee]]]:
    solved: dict[str, list[dict[RuleId, Committee]]] = {
        c.name: [dict() for _ in range(c.count)] for c in cfg.cultures
    }
    with open(cfg.out("committees.jsonl"), "r", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            solved[obj["culture"]][obj["instance"]][RuleId(obj["rule"])] = Committee(
                tuple(obj["members"])
            )
    return solved


def stage_distances(
    cfg: ExperimentConfig,
    elections: dict[str, list[Election]] | None = None,
    committees: dict[str, list[dict[RuleId, Committee]]] | None = None,
) -> dict[str, DistanceMatrix]:
    """Per-instance normalized rule-distance matrices, averaged per culture."""
    if elections is None:
        elections = load_elections(cfg)
    if committees is None:
        committees = load_committees(cfg)
    os.makedirs(cfg.out("matrices"), exist_ok=True)
    rule_values = [r.value for r in cfg.rules]
    matrices: dict[str, DistanceMatrix] = {}
    for culture in cfg.cultures:
        tasks = [
            (
                elections[culture.name][i],
                {r.value: committees[culture.name][i][r].members for r in cfg.rules},
                cfg.metric.value,
                rule_values,
            )
            for i in range(culture.count)
        ]
        grids = _pmap(_distance_worker, tasks, cfg.parallelism)
        matrix = average_matrices(grids)
        matrices[culture.name] = matrix
        with open(cfg.out("matrices", f"{culture.name}.csv"), "w", encoding="utf-8") as fh:
            fh.write(matrix.to_csv())
    return matrices


@dataclass(frozen=True)
class AxiomFractionTable:
    """Per (culture, rule): the fraction of instances satisfying each axiom."""

    cultures: tuple[str, ...]
    rules: tuple[RuleId, ...]
    counts: dict[str, int]
    fractions: dict[tuple[str, RuleId, Axiom], Fraction]

    def fraction(self, culture: str, rule: RuleId, axiom: Axiom) -> Fraction:
        return self.fractions[(culture, rule, axiom)]

    def culture_csv(self, culture: str) -> str:
        lines = ["rule," + ",".join(a.value for a in AXIOM_COLUMNS)]
        for rule in self.rules:
            cells = [
                f"{float(self.fractions[(culture, rule, a)]):.6f}" for a in AXIOM_COLUMNS
            ]
            lines.append(rule.value + "," + ",".join(cells))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        out = []
        for culture in self.cultures:
            out.append(f"### {culture} ({self.counts[culture]} instances)\n")
            header = "| rule | " + " | ".join(a.value for a in AXIOM_COLUMNS) + " |"
            sep = "|" + "---|" * (len(AXIOM_COLUMNS) + 1)
            rows = [header, sep]
            for rule in self.rules:
                cells = " | ".join(
                    f"{float(self.fractions[(culture, rule, a)]):.3f}" for a in AXIOM_COLUMNS
                )
                rows.append(f"| {RULE_LABELS.get(rule, rule.value)} | {cells} |")
            out.append("\n".join(rows) + "\n")
        return "\n".join(out)


def axiom_fraction_table(
    profiles: Mapping[str, Mapping[RuleId, Sequence[Mapping[Axiom, bool]]]],
) -> AxiomFractionTable:
    """Collapse per-instance verdicts into fractions with exact denominators."""
    cultures = tuple(profiles.keys())
    rules: tuple[RuleId, ...] = ()
    counts: dict[str, int] = {}
    fractions: dict[tuple[str, RuleId, Axiom], Fraction] = {}
    for culture, by_rule in profiles.items():
        if rules and tuple(by_rule.keys()) != rules:
            raise ValueError("cultures disagree on the rule list")
        rules = tuple(by_rule.keys())
        for rule, verdicts in by_rule.items():
            if not verdicts:
                raise ValueError(f"no instances for culture={culture} rule={rule.value}")
            counts[culture] = len(verdicts)
            for axiom in AXIOM_COLUMNS:
                hits = sum(1 for v in verdicts if _holds(v[axiom]))
                fractions[(culture, rule, axiom)] = Fraction(hits, len(verdicts))
    return AxiomFractionTable(cultures, rules, counts, fractions)


def _holds(verdict) -> bool:
    return bool(getattr(verdict, "holds", verdict))


def stage_axioms(
    cfg: ExperimentConfig,
    elections: dict[str, list[Election]] | None = None,
    committees: dict[str, list[dict[RuleId, Committee]]] | None = None,
) -> AxiomFractionTable:
    """Audit all four axioms for every (instance, rule) and write fractions."""
    if elections is None:
        elections = load_elections(cfg)
    if committees is None:
        committees = load_committees(cfg)
    os.makedirs(cfg.out("axioms"), exist_ok=True)
    profiles: dict[str, dict[RuleId, list[dict[Axiom, bool]]]] = {}
    for culture in cfg.cultures:
        tasks = [
            (
                elections[culture.name][i],
                {r.value: committees[culture.name][i][r].members for r in cfg.rules},
            )
            for i in range(culture.count)
        ]
        per_instance = _pmap(_axiom_worker, tasks, cfg.parallelism)
        by_rule: dict[RuleId, list[dict[Axiom, bool]]] = {r: [] for r in cfg.rules}
        for result in per_instance:
            for rule in cfg.rules:
                by_rule[rule].append(
                    {Axiom(a): holds for a, holds in result[rule.value].items()}
                )
        profiles[culture.name] = by_rule
    table = axiom_fraction_table(profiles)
    for culture in cfg.cultures:
        with open(cfg.out("axioms", f"{culture.name}.csv"), "w", encoding="utf-8") as fh:
            fh.write(table.culture_csv(culture.name))
    return table


# --- embedding ---------------------------------------------------------------

@dataclass(frozen=True)
class Embedding:
    """A 2D stress-minimizing layout of the rules."""

    rules: tuple[RuleId, ...]
    coordinates: tuple[tuple[float, float], ...]
    stress: float
    iterations: int
    trace: tuple[float, ...]

    def coordinate(self, rule: RuleId) -> tuple[float, float]:
        return self.coordinates[self.rules.index(rule)]

    def to_json(self) -> dict:
        return {
            "stress": self.stress,
            "iterations": self.iterations,
            "coordinates": {
                rule.value: [x, y] for rule, (x, y) in zip(self.rules, self.coordinates)
            },
        }


def embed_stress_min(
    mat: DistanceMatrix, seed: int, max_iters: int = 1000
) -> Embedding:
    """Gradient descent with backtracking line search on the relative stress

        sum_{i<j} (|x_i - x_j| - d_ij)^2 / d_ij^2

    from a seeded random start. Targets are clamped below by 1e-9 so zero
    distances attract without dividing by zero. Stops on max_iters or when
    the relative stress drop falls under 1e-10; output is centered on the
    origin.
    """
    r = len(mat.rules)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    if r == 1:
        return Embedding(mat.rules, ((0.0, 0.0),), 0.0, 0, (0.0,))
    targets = np.maximum(np.array(mat.values, dtype=float), 1e-9)
    np.fill_diagonal(targets, 1.0)  # diagonal never enters the sums
    weight = 1.0 / (targets * targets)
    iu = np.triu_indices(r, k=1)

    scale = float(np.mean(targets[iu])) or 1.0
    x = rng.random((r, 2)) * scale

    def stress_of(pts: np.ndarray) -> float:
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        err = dist - targets
        return float((weight[iu] * err[iu] ** 2).sum())

    def gradient(pts: np.ndarray) -> np.ndarray:
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        np.fill_diagonal(dist, 1.0)
        coef = 2.0 * weight * (dist - targets) / dist
        np.fill_diagonal(coef, 0.0)
        return (coef[:, :, None] * diff).sum(axis=1)

    cur = stress_of(x)
    trace = [cur]
    step = 1.0
    iterations = 0
    for _ in range(max_iters):
        grad = gradient(x)
        norm2 = float((grad * grad).sum())
        if norm2 == 0.0:
            break
        step = min(step * 2.0, 1e6)
        accepted = False
        while step > 1e-20:
            candidate = x - step * grad
            new = stress_of(candidate)
            if new <= cur - 1e-4 * step * norm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        x = candidate
        iterations += 1
        trace.append(new)
        if cur > 0 and (cur - new) / cur < 1e-10:
            cur = new
            break
        cur = new
    x = x - x.mean(axis=0)
    coords = tuple((float(a), float(b)) for a, b in x)
    return Embedding(mat.rules, coords, cur, iterations, tuple(trace))


def stage_map(cfg: ExperimentConfig) -> dict[str, Embedding]:
    """Embed each culture's matrix and render the map figure.

    Always reads matrices/<culture>.csv, so the staged CLI and a monolithic
    run produce the same bytes: the embedding sees the published 6-decimal
    values either way.
    """
    from .plotting import render_map

    matrices = {}
    for culture in cfg.cultures:
        with open(cfg.out("matrices", f"{culture.name}.csv"), "r", encoding="utf-8") as fh:
            matrices[culture.name] = DistanceMatrix.from_csv(fh.read())
    os.makedirs(cfg.out("map"), exist_ok=True)
    embeddings: dict[str, Embedding] = {}
    for culture in cfg.cultures:
        emb = embed_stress_min(
            matrices[culture.name], seed=cfg.master_seed, max_iters=cfg.embed_max_iters
        )
        embeddings[culture.name] = emb
        svg = render_map(
            emb,
            labels=RULE_LABELS,
            highlight=tuple(r for r in cfg.highlight if r in emb.rules),
            title=culture.name,
        )
        with open(cfg.out("map", f"{culture.name}.svg"), "wb") as fh:
            fh.write(svg)
        with open(cfg.out("map", f"{culture.name}.json"), "w", encoding="utf-8") as fh:
            json.dump(emb.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return embeddings


# --- report ------------------------------------------------------------------

def load_fraction_table(cfg: ExperimentConfig) -> AxiomFractionTable:
    """Rebuild the fraction table from axioms/<culture>.csv.

    The published 6-decimal fractions recover the exact hit counts as long as
    each culture has fewer than half a million instances.
    """
    cultures = tuple(c.name for c in cfg.cultures)
    counts = {c.name: c.count for c in cfg.cultures}
    rules: tuple[RuleId, ...] = ()
    fractions: dict[tuple[str, RuleId, Axiom], Fraction] = {}
    for culture in cfg.cultures:
        with open(cfg.out("axioms", f"{culture.name}.csv"), "r", encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        header = lines[0].split(",")
        axioms = [Axiom(a) for a in header[1:]]
        file_rules = []
        for ln in lines[1:]:
            cells = ln.split(",")
            rule = RuleId.from_string(cells[0])
            file_rules.append(rule)
            for axiom, cell in zip(axioms, cells[1:]):
                hits = round(float(cell) * culture.count)
                if abs(hits / culture.count - float(cell)) > 5e-7:
                    raise ValueError(
                        f"{culture.name}/{rule.value}: fraction {cell} does not round-trip "
                        f"over {culture.count} instances"
                    )
                fractions[(culture.name, rule, axiom)] = Fraction(hits, culture.count)
        rules = tuple(file_rules)
    return AxiomFractionTable(cultures, rules, counts, fractions)


def _load_embeddings(cfg: ExperimentConfig) -> dict[str, Embedding]:
    embeddings = {}
    for culture in cfg.cultures:
        with open(cfg.out("map", f"{culture.name}.json"), "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        rules = tuple(RuleId.from_string(r) for r in obj["coordinates"])
        coords = tuple((float(x), float(y)) for x, y in obj["coordinates"].values())
        embeddings[culture.name] = Embedding(
            rules, coords, float(obj["stress"]), int(obj["iterations"]),
            (float(obj["stress"]),),
        )
    return embeddings


def _cohesive_fractions(
    cfg: ExperimentConfig, elections: dict[str, list[Election]], ell: int = 2
) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for culture in cfg.cultures:
        tasks = [(e, ell, cfg.k) for e in elections[culture.name]]
        flags = _pmap(_cohesive_worker, tasks, cfg.parallelism)
        out[culture.name] = Fraction(sum(flags), len(flags))
    return out


def stage_report(
    cfg: ExperimentConfig,
    table: AxiomFractionTable | None = None,
    matrices: dict[str, DistanceMatrix] | None = None,
    embeddings: dict[str, Embedding] | None = None,
    elections: dict[str, list[Election]] | None = None,
) -> str:
    """Write report.md summarizing fractions, matrices, and maps.

    Missing inputs are taken from the run artifacts on disk where possible
    (axioms CSVs, map JSONs) before falling back to recomputation.
    """
    if matrices is None:
        matrices = {}
        for culture in cfg.cultures:
            with open(cfg.out("matrices", f"{culture.name}.csv"), "r", encoding="utf-8") as fh:
                matrices[culture.name] = DistanceMatrix.from_csv(fh.read())
    if embeddings is None:
        try:
            embeddings = _load_embeddings(cfg)
        except FileNotFoundError:
            embeddings = stage_map(cfg)
    if table is None:
        try:
            table = load_fraction_table(cfg)
        except FileNotFoundError:
            table = stage_axioms(cfg, elections)

    lines = ["# Map of multiwinner voting rules", ""]
    lines.append(f"- committee size k = {cfg.k}")
    lines.append(f"- candidate metric: {cfg.metric.value}")
    lines.append(f"- master seed: {cfg.master_seed}")
    lines.append(f"- rules: {', '.join(r.value for r in cfg.rules)}")
    lines.append("")
    lines.append("## Cultures")
    lines.append("")
    for culture in cfg.cultures:
        params = ", ".join(
            f"{key}={value}"
            for key, value in culture.to_json().items()
            if key not in ("name",)
        )
        lines.append(f"- **{culture.name}**: {params}")
    lines.append("")
    lines.append("## Axiom satisfaction fractions")
    lines.append("")
    lines.append("Columns: fraction of instances whose committee satisfies "
                 "priceability, EJR, PJR, JR.")
    lines.append("")
    lines.append(table.to_markdown())

    if cfg.report_cohesive_stats:
        if elections is None:
            elections = load_elections(cfg)
        cohesive = _cohesive_fractions(cfg, elections)
        lines.append("## Cohesive groups (ell = 2)")
        lines.append("")
        lines.append("| culture | fraction of instances with a 2-cohesive group |")
        lines.append("|---|---|")
        for culture in cfg.cultures:
            frac = cohesive[culture.name]
            lines.append(f"| {culture.name} | {float(frac):.3f} ({frac}) |")
        lines.append("")

    lines.append("## Maps")
    lines.append("")
    lines.append("| culture | embedding stress | iterations | figure |")
    lines.append("|---|---|---|---|")
    for culture in cfg.cultures:
        emb = embeddings[culture.name]
        lines.append(
            f"| {culture.name} | {emb.stress:.3e} | {emb.iterations} | "
            f"[svg](map/{culture.name}.svg) |"
        )
    lines.append("")
    lines.append("Distance matrices live in `matrices/<culture>.csv`; raw "
                 "elections and committees in `elections.jsonl` and "
                 "`committees.jsonl`.")
    lines.append("")

    path = cfg.out("report.md")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    return path


@dataclass
class ExperimentResults:
    config: ExperimentConfig
    elections: dict[str, list[Election]]
    committees: dict[str, list[dict[RuleId, Committee]]]
    matrices: dict[str, DistanceMatrix]
    table: AxiomFractionTable
    embeddings: dict[str, Embedding]
    report_path: str


def run_experiment(cfg: ExperimentConfig) -> ExperimentResults:
    """Run every stage; deterministic given the config (including the seed)."""
    elections = stage_generate(cfg)
    committees = stage_solve(cfg, elections)
    matrices = stage_distances(cfg, elections, committees)
    table = stage_axioms(cfg, elections, committees)
    embeddings = stage_map(cfg)
    report_path = stage_report(cfg, table, matrices, embeddings, elections)
    return ExperimentResults(cfg, elections, committees, matrices, table, embeddings, report_path)
