"""Experiment harness: plans, cell execution, emission, evaluator comparison."""

import csv
import math

import pytest

from conftest import toy_instance

from ccmckp.evaluator import StageSchedule
from ccmckp.harness import (
    AlgorithmSpec,
    Budget,
    ExperimentPlan,
    InstanceRef,
    compare_evaluators,
    emit_front_plots_data,
    plan_from_document,
    plan_to_document,
    read_front_csv,
    read_plan,
    run_plan,
    write_front_csv,
    write_plan,
)
from ccmckp.instances import write_instance
from ccmckp.metrics import ObjectivePoint
from ccmckp.moea import Solution
from ccmckp.solver import SolverConfig, Variant

TINY = StageSchedule((200, 2000), (0.95, math.inf))


def tiny_plan(inst_path, reps=2, generations=3, algorithms=("full", "plain-nsga2")):
    return ExperimentPlan(
        instances=(InstanceRef(path=str(inst_path)),),
        algorithms=tuple(AlgorithmSpec(variant=Variant(v)) for v in algorithms),
        repetitions=reps,
        budget=Budget(kind="generations", generations=generations),
        base_config=SolverConfig(
            population_size=8, max_generations=generations, schedule=TINY, local_search_prob=0.2
        ),
        rcl_samples=2000,
        plan_seed=5,
    )


@pytest.fixture
def toy_path(tmp_path):
    inst = toy_instance(
        [[(1, 3.0), (4, 2.0), (9, 1.0)] for _ in range(4)],
        capacity=9.0,
        label="toy-grid",
        seed=3,
    )
    path = tmp_path / "toy.json"
    write_instance(inst, path)
    return path


class TestPlanDocuments:
    def test_round_trip(self, toy_path, tmp_path):
        plan = tiny_plan(toy_path)
        path = tmp_path / "plan.json"
        write_plan(plan, path)
        again = read_plan(path)
        assert plan_to_document(again) == plan_to_document(plan)

    def test_bad_schema(self):
        with pytest.raises(ValueError, match="schema"):
            plan_from_document({"schema": "nope"})

    def test_duplicate_algorithms_rejected(self, toy_path):
        with pytest.raises(ValueError, match="duplicate"):
            tiny_plan(toy_path, algorithms=("full", "full"))

    def test_walltime_anchor_must_exist(self, toy_path):
        with pytest.raises(ValueError, match="anchor"):
            ExperimentPlan(
                instances=(InstanceRef(path=str(toy_path)),),
                algorithms=(AlgorithmSpec(variant=Variant.FULL),),
                budget=Budget(kind="walltime-matched", anchor="missing"),
            )


class TestRunPlan:
    def test_bundle_layout_and_rows(self, toy_path, tmp_path):
        out = tmp_path / "out"
        results = run_plan(tiny_plan(toy_path), out)
        assert (out / "results.csv").exists()
        assert (out / "summary.csv").exists()
        assert (out / "timings.csv").exists()
        assert (out / "manifest.json").exists()
        assert (out / "reference" / "toy-grid.json").exists()
        with open(out / "results.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4  # 1 instance x 2 algorithms x 2 reps
        assert {r["algorithm"] for r in rows} == {"full", "plain-nsga2"}
        for row in rows:
            assert row["status"] == "ok"
            assert float(row["hv"]) >= 0.0
            assert 0.0 <= float(row["fsr"]) <= 1.0
        assert len(results["cells"]) == 4

    def test_deterministic_artifacts(self, toy_path, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_plan(tiny_plan(toy_path), out_a)
        run_plan(tiny_plan(toy_path), out_b)
        for rel in sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file()):
            if rel.name == "timings.csv":
                continue  # wall clock: documented non-reproducible sidecar
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes(), rel

    def test_failure_containment(self, tmp_path):
        # Irreparable instance: hybrid variants fail, plain succeeds; the
        # plan must finish and record both outcomes.
        inst = toy_instance(
            [[(1, 6.0), (2, 5.0)] for _ in range(3)],
            capacity=10.0,
            label="irreparable",
        )
        path = tmp_path / "bad.json"
        write_instance(inst, path)
        out = tmp_path / "out"
        results = run_plan(tiny_plan(path, reps=1), out)
        status = {c.algorithm: c.status for c in results["cells"]}
        assert status == {"full": "failed", "plain-nsga2": "ok"}
        with open(out / "results.csv", newline="") as fh:
            rows = {r["algorithm"]: r for r in csv.DictReader(fh)}
        assert rows["full"]["hv"] == "-"
        assert (out / "runs" / "irreparable__full__rep0.error.txt").exists()

    def test_summary_marks_total_failures(self, tmp_path):
        inst = toy_instance(
            [[(1, 6.0), (2, 5.0)] for _ in range(3)], capacity=10.0, label="irreparable"
        )
        path = tmp_path / "bad.json"
        write_instance(inst, path)
        out = tmp_path / "out"
        run_plan(tiny_plan(path, reps=2, algorithms=("full",)), out)
        with open(out / "summary.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["hv"] == "-" and rows[0]["runs"] == "0"

    def test_walltime_matched_budget(self, toy_path, tmp_path):
        plan = ExperimentPlan(
            instances=(InstanceRef(path=str(toy_path)),),
            algorithms=(
                AlgorithmSpec(variant=Variant.FULL),
                AlgorithmSpec(variant=Variant.PLAIN_NSGA2),
            ),
            repetitions=1,
            budget=Budget(kind="walltime-matched", anchor="full"),
            base_config=SolverConfig(
                population_size=8, max_generations=3, schedule=TINY, local_search_prob=0.1
            ),
            rcl_samples=1000,
            plan_seed=1,
        )
        results = run_plan(plan, tmp_path / "out")
        cells = {c.algorithm: c for c in results["cells"]}
        anchor = cells["full"]
        follower = cells["plain-nsga2"]
        assert anchor.status == "ok" and follower.status == "ok"
        # Follower stops within one generation's duration of the anchor cap.
        per_gen = follower.wall_time_s / max(follower.result.generations_run, 1)
        assert follower.wall_time_s <= anchor.wall_time_s + 3 * per_gen + 0.05

    def test_walltime_budget_with_failed_anchor(self, tmp_path):
        # Anchor (hybrid init) fails on an irreparable instance; followers are
        # capped at zero time but the plan still completes with their output.
        inst = toy_instance(
            [[(1, 6.0), (2, 5.0)] for _ in range(3)], capacity=10.0, label="irreparable"
        )
        path = tmp_path / "bad.json"
        write_instance(inst, path)
        plan = ExperimentPlan(
            instances=(InstanceRef(path=str(path)),),
            algorithms=(
                AlgorithmSpec(variant=Variant.FULL),
                AlgorithmSpec(variant=Variant.PLAIN_NSGA2),
            ),
            repetitions=1,
            budget=Budget(kind="walltime-matched", anchor="full"),
            base_config=SolverConfig(population_size=6, max_generations=3, schedule=TINY),
            rcl_samples=500,
            plan_seed=4,
        )
        results = run_plan(plan, tmp_path / "out")
        status = {c.algorithm: c.status for c in results["cells"]}
        assert status == {"full": "failed", "plain-nsga2": "ok"}
        follower = next(c for c in results["cells"] if c.algorithm == "plain-nsga2")
        assert follower.result.generations_run == 0

    def test_generated_instance_ref(self, tmp_path):
        plan = ExperimentPlan(
            instances=(InstanceRef(family="lab", scale="ls1", seed=3),),
            algorithms=(AlgorithmSpec(variant=Variant.FULL),),
            repetitions=1,
            budget=Budget(kind="generations", generations=1),
            base_config=SolverConfig(population_size=6, max_generations=1, schedule=TINY),
            rcl_samples=1000,
            plan_seed=2,
        )
        results = run_plan(plan, tmp_path / "out")
        assert results["cells"][0].status == "ok"
        assert (tmp_path / "out" / "instances" / "LAB-ls1.json").exists()


class TestFrontFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "front.csv"
        front = [ObjectivePoint(3.0, -0.95), ObjectivePoint(1.0, -0.91)]
        write_front_csv(path, front)
        assert read_front_csv(path) == sorted(front)

    def test_empty_front_has_header(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_front_csv(path, [])
        assert path.read_text().startswith("cost,cl")
        assert read_front_csv(path) == []

    def test_single_point(self, tmp_path):
        path = tmp_path / "one.csv"
        write_front_csv(path, [ObjectivePoint(2.0, -1.0)])
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 2

    def test_emit_front_plots_data(self, toy_path, tmp_path):
        results = run_plan(tiny_plan(toy_path, reps=1), tmp_path / "out")
        emitted = emit_front_plots_data(results, tmp_path / "plots")
        assert len(emitted) == 2
        for path in emitted:
            assert read_front_csv(path) is not None


class TestCompareEvaluators:
    def test_all_infeasible_stage_one_only(self):
        inst = toy_instance([[(1, 5.0)] for _ in range(3)], capacity=10.0)
        sols = [Solution((0, 0, 0))] * 4
        schedule = StageSchedule((100, 1000), (0.9, math.inf))
        report = compare_evaluators(inst, sols, schedule, 1000, seed=3)
        assert report["staged_samples"] == 4 * 100
        assert report["fixed_samples"] == 4 * 1000
        assert report["dominance_agreement"] == 1.0

    def test_all_feasible_equal_totals(self):
        inst = toy_instance([[(1, 1.0)] for _ in range(3)], capacity=10.0)
        sols = [Solution((0, 0, 0))] * 4
        schedule = StageSchedule((100, 1000), (0.9, math.inf))
        report = compare_evaluators(inst, sols, schedule, 1000, seed=3)
        assert report["staged_samples"] == report["fixed_samples"] == 4000
        assert report["sample_reduction"] == 0.0

    def test_rejects_empty(self):
        inst = toy_instance([[(1, 1.0)]], capacity=2.0)
        with pytest.raises(ValueError):
            compare_evaluators(inst, [], TINY, 100, seed=0)
