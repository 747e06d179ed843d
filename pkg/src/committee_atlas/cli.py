"""The ``atlas`` command line: staged experiment runs plus a farthest-committee solver.

Subcommands generate | solve | distances | axioms | map | report share a
config file (TOML or JSON) and write into its output directory; later stages
read the files earlier stages wrote, so a full run is simply the stages in
order (or just ``report`` after ``generate``, since every stage recomputes
missing prerequisites from disk). ``farthest`` works on an election file
directly.
"""

from __future__ import annotations

import argparse
import sys

from .core import CandidateMetric, read_elections_jsonl
from .farthest import fc_brute_force, fc_discrete, fc_type_compressed


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="TOML/JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--out", default=None, help="override output_dir")
    parser.add_argument("--jobs", type=int, default=None, help="override parallelism")


def _load(args) -> "pipeline.ExperimentConfig":
    from . import pipeline

    return pipeline.load_config(
        args.config,
        master_seed=args.seed,
        output_dir=args.out,
        parallelism=args.jobs,
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="atlas",
        description="Compare approval-based multiwinner voting rules on sampled elections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in [
        ("generate", "sample elections into elections.jsonl"),
        ("solve", "compute winning committees into committees.jsonl"),
        ("distances", "average normalized rule-distance matrices"),
        ("axioms", "audit JR/PJR/EJR/priceability fractions"),
        ("map", "embed matrices and render map SVGs"),
        ("report", "write report.md from the run artifacts"),
    ]:
        stage = sub.add_parser(name, help=helptext)
        _add_shared(stage)

    far = sub.add_parser("farthest", help="find two maximally distant committees")
    far.add_argument("elections", help="elections.jsonl file")
    far.add_argument("--index", type=int, default=0, help="election line to use")
    far.add_argument(
        "--metric",
        default="jaccard",
        choices=[m.value for m in CandidateMetric],
    )
    far.add_argument("--k", type=int, required=True, help="committee size")
    far.add_argument(
        "--algorithm",
        default="brute",
        choices=["brute", "typed", "discrete"],
    )
    far.add_argument("--budget", type=int, default=10**8, help="work budget")

    args = parser.parse_args(argv)

    if args.command == "farthest":
        return _run_farthest(args)

    from . import pipeline

    cfg = _load(args)
    if args.command == "generate":
        pipeline.stage_generate(cfg)
    elif args.command == "solve":
        pipeline.stage_solve(cfg)
    elif args.command == "distances":
        pipeline.stage_distances(cfg)
    elif args.command == "axioms":
        pipeline.stage_axioms(cfg)
    elif args.command == "map":
        pipeline.stage_map(cfg)
    elif args.command == "report":
        pipeline.stage_report(cfg)
    print(f"{args.command}: wrote outputs under {cfg.output_dir}")
    return 0


def _run_farthest(args) -> int:
    elections = read_elections_jsonl(args.elections)
    if not 0 <= args.index < len(elections):
        print(f"index {args.index} outside 0..{len(elections) - 1}", file=sys.stderr)
        return 2
    e = elections[args.index]
    metric = CandidateMetric.from_string(args.metric)
    if args.algorithm == "brute":
        result = fc_brute_force(e, args.k, metric, budget=args.budget)
    elif args.algorithm == "typed":
        result = fc_type_compressed(e, args.k, metric, budget=args.budget)
    else:
        result = fc_discrete(e, args.k)
    print(f"distance: {result.distance} (= {float(result.distance):.6f})")
    print(f"X: {list(result.x.members)}")
    print(f"Y: {list(result.y.members)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
