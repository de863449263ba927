"""Command-line interface.

Subcommands:

* ``gen``         generate a benchmark instance document
* ``run``         execute an experiment plan (file or flag-built)
* ``compare-mc``  staged vs fixed-sample evaluator comparison
* ``metrics``     recompute front metrics from stored front files
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import backends
from ._rng import derive_rng
from .evaluator import DEFAULT_SCHEDULE, StageSchedule
from .harness import (
    AlgorithmSpec,
    Budget,
    ExperimentPlan,
    InstanceRef,
    build_reference,
    compare_evaluators,
    read_front_csv,
    read_plan,
    run_plan,
)
from .instances import SCALE_IDS, generate_instance, read_instance, write_instance
from .metrics import hypervolume, igd, igd_plus
from .moea import Solution
from .sampling import InstanceSampler
from .solver import SolverConfig, Variant


def _parse_schedule(stages: str | None, thresholds: str | None) -> StageSchedule:
    if stages is None and thresholds is None:
        return DEFAULT_SCHEDULE
    if stages is None or thresholds is None:
        raise SystemExit("--stages and --thresholds must be given together")
    cum = tuple(int(x) for x in stages.split(","))
    thr = tuple(
        math.inf if x.strip().lower() in ("inf", "infinity") else float(x)
        for x in thresholds.split(",")
    )
    return StageSchedule(cum, thr)


def _cmd_gen(args) -> int:
    instance = generate_instance(args.family, args.scale, args.seed)
    out = Path(args.out) if args.out else Path(f"{instance.label}.json")
    if out.is_dir():
        out = out / f"{instance.label}.json"
    write_instance(instance, out)
    print(f"wrote {out} ({instance.class_count} classes, capacity {instance.capacity})")
    return 0


def _cmd_run(args) -> int:
    if args.plan:
        plan = read_plan(args.plan)
    else:
        if not args.instance:
            raise SystemExit("either --plan or --instance is required")
        refs = []
        for spec in args.instance:
            if Path(spec).exists():
                refs.append(InstanceRef(path=spec))
            else:
                try:
                    family, scale, seed = spec.split(":")
                    refs.append(InstanceRef(family=family, scale=scale, seed=int(seed)))
                except ValueError:
                    raise SystemExit(
                        f"instance {spec!r} is neither a file nor family:scale:seed"
                    ) from None
        schedule = _parse_schedule(args.stages, args.thresholds)
        base = SolverConfig(
            population_size=args.population,
            max_generations=args.generations,
            local_search_prob=args.local_search_prob,
            schedule=schedule,
        )
        budget = (
            Budget(kind="walltime-matched", anchor=args.time_matched_to)
            if args.time_matched_to
            else Budget(kind="generations", generations=args.generations)
        )
        plan = ExperimentPlan(
            instances=tuple(refs),
            algorithms=tuple(AlgorithmSpec(variant=Variant(v)) for v in args.algorithm),
            repetitions=args.repetitions,
            budget=budget,
            base_config=base,
            rcl_samples=args.rcl_samples,
            plan_seed=args.seed,
        )
    results = run_plan(plan, args.out)
    failed = sum(1 for c in results["cells"] if c.status != "ok")
    print(f"ran {len(results['cells'])} cells ({failed} failed); results in {results['out_dir']}")
    return 0


def _cmd_compare_mc(args) -> int:
    instance = read_instance(args.instance) if Path(args.instance).exists() else None
    if instance is None:
        try:
            family, scale, seed = args.instance.split(":")
            instance = generate_instance(family, scale, int(seed))
        except ValueError:
            raise SystemExit(
                f"instance {args.instance!r} is neither a file nor family:scale:seed"
            ) from None
    sampler = InstanceSampler(instance)
    rng = derive_rng(args.seed, "compare-pop")
    sizes = sampler.class_sizes
    solutions = [
        Solution(tuple(int(rng.integers(0, s)) for s in sizes))
        for _ in range(args.solutions)
    ]
    schedule = _parse_schedule(args.stages, args.thresholds)
    report = compare_evaluators(sampler, solutions, schedule, args.fixed_samples, args.seed)
    summary = {k: v for k, v in report.items() if not k.endswith("_estimates")}
    print(json.dumps(summary, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        print(f"full report written to {args.out}")
    return 0


def _cmd_metrics(args) -> int:
    front_dir = Path(args.fronts)
    files = sorted(front_dir.glob("*.csv"))
    if not files:
        raise SystemExit(f"no front files in {front_dir}")
    by_instance: dict[str, list] = {}
    for path in files:
        instance = path.stem.split("__")[0]
        by_instance.setdefault(instance, []).append(path)
    rows = []
    for instance, paths in sorted(by_instance.items()):
        fronts = {p: read_front_csv(p) for p in paths}
        non_empty = [f for f in fronts.values() if f]
        if not non_empty:
            continue
        reference = build_reference(non_empty, margin=args.margin)
        for path, front in sorted(fronts.items()):
            rows.append(
                {
                    "front": path.name,
                    "instance": instance,
                    "hv": hypervolume(front, reference.ref_point),
                    "igd": igd(front, reference.ref_set),
                    "igd_plus": igd_plus(front, reference.ref_set),
                }
            )
    fieldnames = ["front", "instance", "hv", "igd", "igd_plus"]
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            writer.writerows(rows)
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccmckp",
        description=(
            "Chance-constrained multiple-choice knapsack toolkit "
            f"(sampling backend: {backends.BACKEND})"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a benchmark instance")
    gen.add_argument("--family", choices=("lab", "app"), required=True)
    gen.add_argument("--scale", choices=SCALE_IDS, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="output file or directory (default: <label>.json)")
    gen.set_defaults(func=_cmd_gen)

    runp = sub.add_parser("run", help="run an experiment plan")
    runp.add_argument("--plan", help="plan document (JSON); overrides the other flags")
    runp.add_argument(
        "--instance",
        action="append",
        help="instance file or family:scale:seed (repeatable)",
    )
    runp.add_argument(
        "--algorithm",
        action="append",
        default=None,
        help="solver variant (repeatable): full, no-local-search, no-hybrid-init, plain-nsga2",
    )
    runp.add_argument("--repetitions", type=int, default=5)
    runp.add_argument("--generations", type=int, default=100)
    runp.add_argument("--population", type=int, default=100)
    runp.add_argument("--local-search-prob", type=float, default=0.1)
    runp.add_argument("--seed", type=int, default=0, help="plan seed")
    runp.add_argument("--rcl-samples", type=int, default=1_000_000)
    runp.add_argument("--stages", help="comma-separated cumulative sample sizes")
    runp.add_argument("--thresholds", help="comma-separated stage thresholds (last: inf)")
    runp.add_argument(
        "--time-matched-to",
        help="wall-time budget: cap every variant at this variant's recorded time",
    )
    runp.add_argument("--out", required=True, help="output directory")
    runp.set_defaults(func=_cmd_run)

    cmp_mc = sub.add_parser("compare-mc", help="compare staged vs fixed-sample evaluation")
    cmp_mc.add_argument("--instance", required=True, help="file or family:scale:seed")
    cmp_mc.add_argument("--solutions", type=int, default=200)
    cmp_mc.add_argument("--fixed-samples", type=int, default=1_000_000)
    cmp_mc.add_argument("--seed", type=int, default=0)
    cmp_mc.add_argument("--stages", help="comma-separated cumulative sample sizes")
    cmp_mc.add_argument("--thresholds", help="comma-separated stage thresholds (last: inf)")
    cmp_mc.add_argument("--out", help="write the full JSON report here")
    cmp_mc.set_defaults(func=_cmd_compare_mc)

    met = sub.add_parser("metrics", help="recompute metrics from stored front files")
    met.add_argument("--fronts", required=True, help="directory of front CSV files")
    met.add_argument("--margin", type=float, default=0.1)
    met.add_argument("--out", help="output CSV (default: stdout)")
    met.set_defaults(func=_cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "run" and not args.plan and not args.algorithm:
        args.algorithm = ["full"]
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
