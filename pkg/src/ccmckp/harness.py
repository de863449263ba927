"""Experiment harness: seeded plans, evaluator comparison, result emission.

A plan is a grid of (instance, algorithm variant, repetition) cells. Every
cell gets a seed derived from the plan seed, runs independently, and
contributes its feasible front to a per-instance reference set from which
hypervolume / IGD / IGD+ are computed. Results land in an output directory:

    manifest.json           plan echo, schema versions, reference margin
    instances/*.json        the generated instance documents
    runs/*.json             per-run snapshots (deterministic; no wall times)
    fronts/*.csv            per-run feasible fronts as (cost, cl) rows
    reference/*.json        per-instance reference point and set
    results.csv             one row per cell: metrics and counters
    summary.csv             mean +/- sd per (instance, algorithm, metric)
    timings.csv             wall-clock sidecar (intentionally separate: it is
                            the one non-reproducible output)

Budgets are either a fixed generation count or wall-time matching: the anchor
variant runs first and its recorded time caps every other variant on the same
instance/repetition, checked between generations.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from ._rng import derive_rng, derive_seed
from .evaluator import StageSchedule, estimate_cl_fixed, estimate_cl_staged
from .instances import Instance, generate_instance, read_instance, write_instance
from .metrics import (
    DEFAULT_REFERENCE_MARGIN,
    ObjectivePoint,
    ReferenceData,
    build_reference,
    front_from_evaluations,
    fsr,
    hypervolume,
    igd,
    igd_plus,
)
from .moea import Evaluation, Solution, constrained_dominates, make_evaluation
from .sampling import InstanceSampler, as_sampler
from .solver import RunResult, SolverConfig, Variant, run

SCHEMA_PLAN = "ccmckp-plan/1"
SCHEMA_MANIFEST = "ccmckp-results/1"

RESULT_FIELDS = (
    "instance",
    "algorithm",
    "repetition",
    "run_seed",
    "status",
    "hv",
    "igd",
    "igd_plus",
    "fsr",
    "generations",
    "evaluations",
    "samples",
    "front_size",
)


@dataclass(frozen=True)
class InstanceRef:
    """Either a generated benchmark instance or a path to a document."""

    family: Optional[str] = None
    scale: Optional[str] = None
    seed: Optional[int] = None
    path: Optional[str] = None

    def __post_init__(self):
        from_file = self.path is not None
        generated = self.family is not None or self.scale is not None or self.seed is not None
        if from_file == generated:
            raise ValueError("instance ref needs either a path or (family, scale, seed)")
        if generated and (self.family is None or self.scale is None or self.seed is None):
            raise ValueError("generated instance ref needs family, scale and seed")

    def load(self) -> Instance:
        if self.path is not None:
            return read_instance(self.path)
        return generate_instance(self.family, self.scale, self.seed)

    def to_doc(self) -> dict:
        if self.path is not None:
            return {"path": self.path}
        return {"family": self.family, "scale": self.scale, "seed": self.seed}

    @classmethod
    def from_doc(cls, doc: dict) -> "InstanceRef":
        if "path" in doc:
            return cls(path=doc["path"])
        return cls(family=doc["family"], scale=doc["scale"], seed=doc["seed"])


@dataclass(frozen=True)
class AlgorithmSpec:
    variant: Variant
    name: Optional[str] = None
    overrides: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.name or self.variant.value


@dataclass(frozen=True)
class Budget:
    kind: str  # "generations" | "walltime-matched"
    generations: Optional[int] = None
    anchor: Optional[str] = None

    def __post_init__(self):
        if self.kind == "generations":
            if self.generations is None or self.generations < 0:
                raise ValueError("generation budget needs generations >= 0")
        elif self.kind == "walltime-matched":
            if self.anchor is None:
                raise ValueError("wall-time budget needs an anchor algorithm label")
        else:
            raise ValueError(f"unknown budget kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentPlan:
    instances: tuple[InstanceRef, ...]
    algorithms: tuple[AlgorithmSpec, ...]
    repetitions: int = 5
    budget: Budget = field(default_factory=lambda: Budget(kind="generations", generations=100))
    base_config: SolverConfig = field(default_factory=SolverConfig)
    rcl_samples: int = 1_000_000
    reference_margin: float = DEFAULT_REFERENCE_MARGIN
    plan_seed: int = 0

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.instances or not self.algorithms:
            raise ValueError("plan needs at least one instance and one algorithm")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate algorithm labels: {labels}")
        if self.budget.kind == "walltime-matched" and self.budget.anchor not in labels:
            raise ValueError(
                f"wall-time anchor {self.budget.anchor!r} is not one of {labels}"
            )


def _apply_overrides(base: SolverConfig, overrides: dict) -> SolverConfig:
    if not overrides:
        return base
    allowed = {
        "population_size",
        "max_generations",
        "local_search_prob",
        "double_swap_budget",
        "max_perturbation_attempts",
    }
    unknown = set(overrides) - allowed
    if unknown:
        raise ValueError(f"unknown solver overrides: {sorted(unknown)}")
    return replace(base, **overrides)


@dataclass
class CellResult:
    instance_label: str
    algorithm: str
    repetition: int
    run_seed: int
    status: str  # "ok" | "failed"
    error: Optional[str] = None
    result: Optional[RunResult] = None
    front: list[ObjectivePoint] = field(default_factory=list)
    hv: Optional[float] = None
    igd: Optional[float] = None
    igd_plus: Optional[float] = None
    fsr: Optional[float] = None
    wall_time_s: Optional[float] = None


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return repr(value)


def run_plan(plan: ExperimentPlan, out_dir: str | Path) -> dict:
    """Execute every cell of the plan and write the results bundle.

    A failing cell is recorded and skipped; it never aborts the plan.
    Returns a summary dict with the bundle paths and per-cell rows.
    """
    out = Path(out_dir)
    for sub in ("instances", "runs", "fronts", "reference"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    # Anchor-first algorithm execution order under wall-time matching.
    algo_order = list(range(len(plan.algorithms)))
    if plan.budget.kind == "walltime-matched":
        anchor_idx = next(
            i for i, a in enumerate(plan.algorithms) if a.label == plan.budget.anchor
        )
        algo_order.remove(anchor_idx)
        algo_order.insert(0, anchor_idx)

    all_cells: list[CellResult] = []
    for inst_idx, ref in enumerate(plan.instances):
        instance = ref.load()
        write_instance(instance, out / "instances" / f"{instance.label}.json")
        sampler = InstanceSampler(instance)
        anchor_times: dict[int, float] = {}
        cells: list[CellResult] = []
        for order_pos, algo_idx in enumerate(algo_order):
            algo = plan.algorithms[algo_idx]
            for rep in range(plan.repetitions):
                run_seed = derive_seed(plan.plan_seed, "cell", inst_idx, algo_idx, rep)
                cfg = _apply_overrides(plan.base_config, algo.overrides)
                cfg = replace(cfg, variant=algo.variant, run_seed=run_seed)
                if plan.budget.kind == "generations":
                    cfg = replace(cfg, max_generations=plan.budget.generations)
                elif order_pos > 0:
                    # Non-anchor: uncapped generations, wall-time capped. A
                    # failed anchor repetition caps its followers at zero.
                    cfg = replace(
                        cfg,
                        max_generations=1_000_000,
                        time_limit_s=anchor_times.get(rep, 0.0),
                    )
                cell = CellResult(
                    instance_label=instance.label,
                    algorithm=algo.label,
                    repetition=rep,
                    run_seed=run_seed,
                    status="ok",
                )
                try:
                    result = run(sampler, cfg)
                except Exception as exc:  # noqa: BLE001 - cell isolation is the point
                    cell.status = "failed"
                    cell.error = f"{type(exc).__name__}: {exc}"
                else:
                    cell.result = result
                    cell.wall_time_s = result.wall_time_s
                    cell.front = front_from_evaluations(result.population)
                    if plan.budget.kind == "walltime-matched" and order_pos == 0:
                        anchor_times[rep] = result.wall_time_s
                cells.append(cell)

        # Per-instance reference data from every successful front.
        fronts = [c.front for c in cells if c.status == "ok" and c.front]
        reference: Optional[ReferenceData] = None
        if fronts:
            reference = build_reference(fronts, margin=plan.reference_margin)
            ref_doc = {
                "schema": "ccmckp-reference/1",
                "instance": instance.label,
                "margin": reference.margin,
                "ref_point": list(reference.ref_point),
                "ref_set": [list(p) for p in reference.ref_set],
            }
            (out / "reference" / f"{instance.label}.json").write_text(
                json.dumps(ref_doc, indent=2) + "\n", encoding="utf-8"
            )

        for cell in cells:
            stem = f"{instance.label}__{cell.algorithm}__rep{cell.repetition}"
            if cell.status != "ok":
                (out / "runs" / f"{stem}.error.txt").write_text(
                    (cell.error or "unknown failure") + "\n", encoding="utf-8"
                )
                continue
            run_doc = cell.result.to_document()
            (out / "runs" / f"{stem}.json").write_text(
                json.dumps(run_doc, indent=2) + "\n", encoding="utf-8"
            )
            write_front_csv(out / "fronts" / f"{stem}.csv", cell.front)
            if reference is not None:
                cell.hv = hypervolume(cell.front, reference.ref_point)
                cell.igd = igd(cell.front, reference.ref_set)
                cell.igd_plus = igd_plus(cell.front, reference.ref_set)
            rcl_rng = derive_rng(plan.plan_seed, "rcl", inst_idx, cell.algorithm, cell.repetition)
            cell.fsr = fsr(
                [s for s, _ in cell.result.population],
                sampler,
                plan.rcl_samples,
                rcl_rng,
            )
        all_cells.extend(cells)

    _write_results_csv(out / "results.csv", all_cells)
    _write_summary_csv(out / "summary.csv", all_cells)
    _write_timings_csv(out / "timings.csv", all_cells)
    manifest = {
        "schema": SCHEMA_MANIFEST,
        "plan": plan_to_document(plan),
        "rcl_samples": plan.rcl_samples,
        "reference_margin": plan.reference_margin,
        "cells": len(all_cells),
        "failed_cells": sum(1 for c in all_cells if c.status != "ok"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return {
        "out_dir": str(out),
        "cells": all_cells,
        "results_csv": str(out / "results.csv"),
        "summary_csv": str(out / "summary.csv"),
    }


def write_front_csv(path: str | Path, front: Sequence[ObjectivePoint]) -> None:
    """Plot-ready front data: one (cost, cl) row per point, cost ascending."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cost", "cl"])
        for p in sorted(front):
            writer.writerow([repr(p.cost), repr(-p.neg_cl)])


def read_front_csv(path: str | Path) -> list[ObjectivePoint]:
    points: list[ObjectivePoint] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["cost", "cl"]:
            raise ValueError(f"{path}: expected header cost,cl, got {reader.fieldnames}")
        for row in reader:
            points.append(ObjectivePoint(float(row["cost"]), -float(row["cl"])))
    return points


def _write_results_csv(path: Path, cells: Sequence[CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_FIELDS)
        for c in cells:
            if c.status == "ok":
                r = c.result
                writer.writerow(
                    [
                        c.instance_label,
                        c.algorithm,
                        c.repetition,
                        c.run_seed,
                        c.status,
                        _fmt(c.hv),
                        _fmt(c.igd),
                        _fmt(c.igd_plus),
                        _fmt(c.fsr),
                        r.generations_run,
                        r.total_evaluations,
                        r.total_samples,
                        len(c.front),
                    ]
                )
            else:
                writer.writerow(
                    [c.instance_label, c.algorithm, c.repetition, c.run_seed, c.status]
                    + ["-"] * 8
                )


def _summary_stat(values: list[float]) -> str:
    finite = [v for v in values if v is not None and not math.isinf(v)]
    if not values:
        return "-"
    if any(v is None for v in values):
        return "-"
    if len(finite) != len(values):
        return "inf"
    mean = statistics.fmean(finite)
    sd = statistics.stdev(finite) if len(finite) > 1 else 0.0
    return f"{mean:.6g} +/- {sd:.6g}"


def _write_summary_csv(path: Path, cells: Sequence[CellResult]) -> None:
    groups: dict[tuple[str, str], list[CellResult]] = {}
    for c in cells:
        groups.setdefault((c.instance_label, c.algorithm), []).append(c)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "algorithm", "runs", "hv", "igd", "igd_plus", "fsr"])
        for (inst, algo), group in sorted(groups.items()):
            ok = [c for c in group if c.status == "ok"]
            if not ok:
                writer.writerow([inst, algo, 0, "-", "-", "-", "-"])
                continue
            writer.writerow(
                [
                    inst,
                    algo,
                    len(ok),
                    _summary_stat([c.hv for c in ok]),
                    _summary_stat([c.igd for c in ok]),
                    _summary_stat([c.igd_plus for c in ok]),
                    _summary_stat([c.fsr for c in ok]),
                ]
            )


def _write_timings_csv(path: Path, cells: Sequence[CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "algorithm", "repetition", "wall_time_s"])
        for c in cells:
            writer.writerow(
                [
                    c.instance_label,
                    c.algorithm,
                    c.repetition,
                    "-" if c.wall_time_s is None else f"{c.wall_time_s:.6f}",
                ]
            )


# --- evaluator comparison ---------------------------------------------------


def compare_evaluators(
    instance_or_sampler,
    solutions: Sequence[Solution],
    schedule: StageSchedule,
    fixed_samples: int,
    seed: int,
) -> dict:
    """Evaluate every solution with both the staged and the fixed estimator.

    Reports total samples and wall time per estimator, the estimate deltas,
    and how often the two induced pairwise dominance relations agree.
    """
    if len(solutions) == 0:
        raise ValueError("solution list must be non-empty")
    sampler = as_sampler(instance_or_sampler)
    p0 = sampler.required_confidence

    staged_evals: list[Evaluation] = []
    started = time.perf_counter()
    for idx, sol in enumerate(solutions):
        est = estimate_cl_staged(sampler, sol.genes, schedule, derive_rng(seed, "staged", idx))
        staged_evals.append(make_evaluation(sampler.cost(sol.genes), est, p0))
    staged_time = time.perf_counter() - started

    fixed_evals: list[Evaluation] = []
    started = time.perf_counter()
    for idx, sol in enumerate(solutions):
        est = estimate_cl_fixed(sampler, sol.genes, fixed_samples, derive_rng(seed, "fixed", idx))
        fixed_evals.append(make_evaluation(sampler.cost(sol.genes), est, p0))
    fixed_time = time.perf_counter() - started

    staged_samples = sum(e.cl.samples_used for e in staged_evals)
    fixed_total = sum(e.cl.samples_used for e in fixed_evals)

    def relation(a: Evaluation, b: Evaluation) -> int:
        if constrained_dominates(a, b):
            return 1
        if constrained_dominates(b, a):
            return -1
        return 0

    n = len(solutions)
    agree = 0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs += 1
            if relation(staged_evals[i], staged_evals[j]) == relation(
                fixed_evals[i], fixed_evals[j]
            ):
                agree += 1
    deltas = [abs(a.p_hat - b.p_hat) for a, b in zip(staged_evals, fixed_evals)]
    return {
        "solutions": n,
        "staged_samples": staged_samples,
        "fixed_samples": fixed_total,
        "sample_reduction": 1.0 - staged_samples / fixed_total,
        "staged_wall_s": staged_time,
        "fixed_wall_s": fixed_time,
        "dominance_agreement": agree / pairs if pairs else 1.0,
        "mean_abs_delta": sum(deltas) / n,
        "max_abs_delta": max(deltas),
        "staged_estimates": [e.p_hat for e in staged_evals],
        "fixed_estimates": [e.p_hat for e in fixed_evals],
    }


def emit_front_plots_data(results: dict, out_dir: str | Path | None = None) -> list[Path]:
    """Re-emit per-cell front files from an in-memory results bundle."""
    base = Path(out_dir) if out_dir is not None else Path(results["out_dir"]) / "fronts"
    base.mkdir(parents=True, exist_ok=True)
    written = []
    for cell in results["cells"]:
        if cell.status != "ok":
            continue
        path = base / f"{cell.instance_label}__{cell.algorithm}__rep{cell.repetition}.csv"
        write_front_csv(path, cell.front)
        written.append(path)
    return written


# --- plan documents -----------------------------------------------------------


def plan_to_document(plan: ExperimentPlan) -> dict:
    doc = {
        "schema": SCHEMA_PLAN,
        "plan_seed": plan.plan_seed,
        "repetitions": plan.repetitions,
        "rcl_samples": plan.rcl_samples,
        "reference_margin": plan.reference_margin,
        "budget": {
            "kind": plan.budget.kind,
            **(
                {"generations": plan.budget.generations}
                if plan.budget.kind == "generations"
                else {"anchor": plan.budget.anchor}
            ),
        },
        "solver": {
            "population_size": plan.base_config.population_size,
            "max_generations": plan.base_config.max_generations,
            "local_search_prob": plan.base_config.local_search_prob,
            "surrogate_lam": plan.base_config.surrogate.lam,
            "schedule": {
                "cumulative_samples": list(plan.base_config.schedule.cumulative_samples),
                "thresholds": [
                    "inf" if math.isinf(t) else t for t in plan.base_config.schedule.thresholds
                ],
            },
        },
        "instances": [ref.to_doc() for ref in plan.instances],
        "algorithms": [
            {"variant": a.variant.value, "name": a.label, "overrides": dict(a.overrides)}
            for a in plan.algorithms
        ],
    }
    return doc


def plan_from_document(doc: dict) -> ExperimentPlan:
    if doc.get("schema") != SCHEMA_PLAN:
        raise ValueError(f"expected plan schema {SCHEMA_PLAN!r}, got {doc.get('schema')!r}")
    budget_doc = doc.get("budget", {"kind": "generations", "generations": 100})
    budget = Budget(
        kind=budget_doc["kind"],
        generations=budget_doc.get("generations"),
        anchor=budget_doc.get("anchor"),
    )
    solver_doc = doc.get("solver", {})
    base = SolverConfig()
    if solver_doc:
        schedule = base.schedule
        if "schedule" in solver_doc:
            thresholds = [
                math.inf if t == "inf" else float(t)
                for t in solver_doc["schedule"]["thresholds"]
            ]
            schedule = StageSchedule(
                tuple(solver_doc["schedule"]["cumulative_samples"]), tuple(thresholds)
            )
        from .sampling import SurrogateConfig

        base = SolverConfig(
            population_size=solver_doc.get("population_size", base.population_size),
            max_generations=solver_doc.get("max_generations", base.max_generations),
            local_search_prob=solver_doc.get("local_search_prob", base.local_search_prob),
            surrogate=SurrogateConfig(lam=solver_doc.get("surrogate_lam", 3.0)),
            schedule=schedule,
        )
    return ExperimentPlan(
        instances=tuple(InstanceRef.from_doc(d) for d in doc["instances"]),
        algorithms=tuple(
            AlgorithmSpec(
                variant=Variant(a["variant"]),
                name=a.get("name"),
                overrides=a.get("overrides", {}),
            )
            for a in doc["algorithms"]
        ),
        repetitions=doc.get("repetitions", 5),
        budget=budget,
        base_config=base,
        rcl_samples=doc.get("rcl_samples", 1_000_000),
        reference_margin=doc.get("reference_margin", DEFAULT_REFERENCE_MARGIN),
        plan_seed=doc.get("plan_seed", 0),
    )


def read_plan(path: str | Path) -> ExperimentPlan:
    return plan_from_document(json.loads(Path(path).read_text(encoding="utf-8")))


def write_plan(plan: ExperimentPlan, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(plan_to_document(plan), indent=2) + "\n", encoding="utf-8"
    )
