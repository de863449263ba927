"""Hybrid evolutionary solver.

NSGA-II backbone extended with two problem-specific components:

* hybrid initialization -- a greedy ratio-based seed, repaired into surrogate
  feasibility, then perturbed under a surrogate-feasibility filter to fill
  the population. Anchors the search inside the (typically tiny) feasible
  region instead of hoping variation stumbles into it.
* probabilistic local search -- single-item swaps, two-class coordinated
  swaps, and a feasible degradation move, applied to a random fraction of
  each generation and appended alongside the originals.

Candidate confidence levels are estimated with the staged evaluator, so most
of the population settles at the cheap first stage.

Ablation variants switch these components off individually (``Variant``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from ._rng import derive_rng
from .evaluator import DEFAULT_SCHEDULE, StageSchedule, estimate_cl_staged
from .instances import Instance
from .moea import (
    Evaluation,
    Solution,
    VariationConfig,
    binary_tournament,
    crossover,
    environmental_selection,
    make_evaluation,
    mutate,
    nondominated_sort,
    rank_and_crowd,
)
from .sampling import InstanceSampler, SurrogateConfig, as_sampler


class IrreparableInstanceError(RuntimeError):
    """Even the all-lightest selection exceeds the capacity in surrogate terms."""


class Variant(str, Enum):
    FULL = "full"
    NO_LOCAL_SEARCH = "no-local-search"
    NO_HYBRID_INIT = "no-hybrid-init"
    PLAIN_NSGA2 = "plain-nsga2"

    @property
    def uses_local_search(self) -> bool:
        return self in (Variant.FULL, Variant.NO_HYBRID_INIT)

    @property
    def uses_hybrid_init(self) -> bool:
        return self in (Variant.FULL, Variant.NO_LOCAL_SEARCH)


@dataclass(frozen=True)
class SolverConfig:
    population_size: int = 100
    max_generations: int = 100
    local_search_prob: float = 0.1
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    variation: VariationConfig = field(default_factory=VariationConfig)
    schedule: StageSchedule = DEFAULT_SCHEDULE
    max_perturbation_attempts: Optional[int] = None  # None -> 100 * population_size
    double_swap_budget: Optional[int] = None  # None -> one pair budget per class
    variant: Variant = Variant.FULL
    run_seed: int = 0
    time_limit_s: Optional[float] = None

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if not 0.0 <= self.local_search_prob <= 1.0:
            raise ValueError("local_search_prob must lie in [0, 1]")

    @property
    def perturbation_cap(self) -> int:
        if self.max_perturbation_attempts is not None:
            return self.max_perturbation_attempts
        return 100 * self.population_size


@dataclass
class GenerationStats:
    generation: int
    evaluations: int
    samples: int
    feasible_count: int
    front: tuple[tuple[float, float], ...]  # (cost, cl) of the feasible first front


@dataclass
class RunResult:
    label: str
    variant: str
    run_seed: int
    population: list[tuple[Solution, Evaluation]]
    per_generation: list[GenerationStats]
    total_evaluations: int
    total_samples: int
    generations_run: int
    wall_time_s: float

    def feasible_front(self) -> list[tuple[Solution, Evaluation]]:
        """Non-dominated feasible members of the final population."""
        feasible = [(s, e) for s, e in self.population if e.feasible]
        if not feasible:
            return []
        fronts = nondominated_sort([e for _, e in feasible])
        first = [feasible[i] for i in fronts[0]]
        return sorted(first, key=lambda pair: (pair[1].cost, pair[1].neg_cl))

    def to_document(self) -> dict:
        """Machine-readable snapshot; wall-clock time is intentionally left out
        so identical seeds produce byte-identical documents."""
        return {
            "schema": "ccmckp-run/1",
            "label": self.label,
            "variant": self.variant,
            "run_seed": self.run_seed,
            "generations_run": self.generations_run,
            "total_evaluations": self.total_evaluations,
            "total_samples": self.total_samples,
            "per_generation": [
                {
                    "generation": g.generation,
                    "evaluations": g.evaluations,
                    "samples": g.samples,
                    "feasible_count": g.feasible_count,
                    "front": [[c, p] for c, p in g.front],
                }
                for g in self.per_generation
            ],
            "population": [
                {
                    "genes": list(s.genes),
                    "cost": e.cost,
                    "cl": e.p_hat,
                    "samples_used": e.cl.samples_used,
                    "feasible": e.feasible,
                }
                for s, e in self.population
            ],
        }


class _Budget:
    __slots__ = ("evaluations", "samples")

    def __init__(self):
        self.evaluations = 0
        self.samples = 0


def _evaluate(
    sampler: InstanceSampler,
    solution: Solution,
    cfg: SolverConfig,
    rng: np.random.Generator,
    budget: _Budget,
) -> Evaluation:
    cost = sampler.cost(solution.genes)
    estimate = estimate_cl_staged(sampler, solution.genes, cfg.schedule, rng)
    budget.evaluations += 1
    budget.samples += estimate.samples_used
    return make_evaluation(cost, estimate, sampler.required_confidence)


# --- initialization -----------------------------------------------------------


def greedy_seed(instance_or_sampler, cfg: SurrogateConfig) -> Solution:
    """Per class, pick the item with the best saving-to-surrogate-weight ratio.

    The saving of an item is the class's maximum cost minus its own cost. Ties
    go to the lower surrogate weight, then the lower index.
    """
    sampler = as_sampler(instance_or_sampler)
    surrogate = sampler.surrogate_weights(cfg)
    genes = []
    for ci, cls in enumerate(sampler.instance.classes):
        cmax = max(item.cost for item in cls.items)
        best = None
        for j, item in enumerate(cls.items):
            w = float(surrogate[ci][j])
            saving = cmax - item.cost
            if w > 0.0:
                ratio = saving / w
            else:
                ratio = math.inf if saving > 0.0 else 0.0
            key = (ratio, -w)
            if best is None or key > best[0]:
                best = (key, j)
        genes.append(best[1])
    return Solution(tuple(genes))


def repair_to_surrogate_feasible(
    instance_or_sampler, solution: Solution, cfg: SurrogateConfig
) -> Solution:
    """Swap items for lighter alternatives until the surrogate total fits.

    Each step applies the swap with the best surrogate-weight reduction per
    unit of extra cost (cost-free reductions first; ties by larger reduction).
    """
    sampler = as_sampler(instance_or_sampler)
    surrogate = sampler.surrogate_weights(cfg)
    capacity = sampler.capacity
    genes = list(solution.genes)
    total = sum(float(surrogate[ci][g]) for ci, g in enumerate(genes))
    while total > capacity:
        best = None
        for ci, cls in enumerate(sampler.instance.classes):
            current = genes[ci]
            w_cur = float(surrogate[ci][current])
            c_cur = cls.items[current].cost
            for j, item in enumerate(cls.items):
                w_alt = float(surrogate[ci][j])
                reduction = w_cur - w_alt
                if reduction <= 0.0:
                    continue
                extra_cost = item.cost - c_cur
                score = math.inf if extra_cost <= 0.0 else reduction / extra_cost
                key = (score, reduction)
                if best is None or key > best[0]:
                    best = (key, ci, j, reduction)
        if best is None:
            raise IrreparableInstanceError(
                f"no selection fits capacity {capacity}: minimum surrogate total is "
                f"{sampler.min_surrogate_total(cfg):.6g}"
            )
        _, ci, j, reduction = best
        genes[ci] = j
        total -= reduction
    return Solution(tuple(genes))


def hybrid_initialization(
    instance_or_sampler, cfg: SolverConfig, rng: np.random.Generator
) -> list[Solution]:
    """Repaired greedy seed plus surrogate-feasible perturbations of it.

    Perturbations resample a random subset of classes (size uniform in
    [1, ceil(m/2)]) and are kept only when surrogate-feasible; after the
    attempt cap, any shortfall is filled with seed copies nudged one gene
    toward the lightest alternative, which cannot break feasibility.
    """
    sampler = as_sampler(instance_or_sampler)
    surrogate = sampler.surrogate_weights(cfg.surrogate)
    capacity = sampler.capacity
    seed = repair_to_surrogate_feasible(sampler, greedy_seed(sampler, cfg.surrogate), cfg.surrogate)
    population = [seed]
    m = sampler.instance.class_count
    sizes = sampler.class_sizes
    max_subset = max(1, math.ceil(m / 2))
    attempts = 0
    while len(population) < cfg.population_size and attempts < cfg.perturbation_cap:
        attempts += 1
        k = int(rng.integers(1, max_subset + 1))
        subset = rng.choice(m, size=k, replace=False)
        genes = list(seed.genes)
        for ci in subset:
            genes[int(ci)] = int(rng.integers(0, sizes[int(ci)]))
        total = sum(float(surrogate[ci][g]) for ci, g in enumerate(genes))
        if total <= capacity:
            population.append(Solution(tuple(genes)))
    while len(population) < cfg.population_size:
        genes = list(seed.genes)
        order = rng.permutation(m)
        for ci in order:
            ci = int(ci)
            lightest = int(np.argmin(surrogate[ci]))
            if surrogate[ci][lightest] < surrogate[ci][genes[ci]]:
                genes[ci] = lightest
                break
        population.append(Solution(tuple(genes)))
    return population


def _uniform_population(
    sampler: InstanceSampler, cfg: SolverConfig, rng: np.random.Generator
) -> list[Solution]:
    sizes = sampler.class_sizes
    return [
        Solution(tuple(int(rng.integers(0, s)) for s in sizes))
        for _ in range(cfg.population_size)
    ]


# --- local search ---------------------------------------------------------


def _improves(candidate: Evaluation, current: Evaluation) -> bool:
    # Weak Pareto improvement on (cost, estimated CL): at least one objective
    # strictly better, the other not worse. An exact CL tie must bring a
    # strictly cheaper cost.
    if candidate.cost <= current.cost and candidate.p_hat >= current.p_hat:
        return candidate.cost < current.cost or candidate.p_hat > current.p_hat
    return False


def local_search_single_swap(
    instance_or_sampler,
    solution: Solution,
    evaluation: Evaluation,
    cfg: SolverConfig,
    rng: np.random.Generator,
    budget: Optional[_Budget] = None,
) -> tuple[Solution, Evaluation]:
    """First-improvement scan of all one-item replacements, class by class.

    Classes are visited in random order, items in index order. A swap must
    stay surrogate-feasible and improve at least one objective estimate
    without degrading the other.
    """
    sampler = as_sampler(instance_or_sampler)
    budget = budget if budget is not None else _Budget()
    surrogate = sampler.surrogate_weights(cfg.surrogate)
    capacity = sampler.capacity
    current, current_eval = solution, evaluation
    total = sum(float(surrogate[ci][g]) for ci, g in enumerate(current.genes))
    for ci in rng.permutation(sampler.instance.class_count):
        ci = int(ci)
        items = sampler.instance.classes[ci].items
        for j in range(len(items)):
            if j == current.genes[ci]:
                continue
            new_total = total - float(surrogate[ci][current.genes[ci]]) + float(surrogate[ci][j])
            if new_total > capacity:
                continue
            # Acceptance needs cost not to degrade; skip the evaluation when
            # the candidate is strictly costlier (it can never pass).
            if items[j].cost > items[current.genes[ci]].cost:
                continue
            candidate = current.replaced(ci, j)
            cand_eval = _evaluate(sampler, candidate, cfg, rng, budget)
            if _improves(cand_eval, current_eval):
                current, current_eval, total = candidate, cand_eval, new_total
                break  # first improvement: move on to the next class
    return current, current_eval


def local_search_double_swap(
    instance_or_sampler,
    solution: Solution,
    evaluation: Evaluation,
    cfg: SolverConfig,
    rng: np.random.Generator,
    budget: Optional[_Budget] = None,
) -> tuple[Solution, Evaluation]:
    """Coordinated replacement in two distinct classes at once.

    A bounded number of class pairs is sampled without replacement; for each,
    all item combinations that change both classes are tried with
    first-improvement acceptance.
    """
    sampler = as_sampler(instance_or_sampler)
    budget = budget if budget is not None else _Budget()
    m = sampler.instance.class_count
    if m < 2:
        return solution, evaluation
    surrogate = sampler.surrogate_weights(cfg.surrogate)
    capacity = sampler.capacity
    pairs = [(a, b) for a in range(m) for b in range(a + 1, m)]
    pair_budget = min(len(pairs), cfg.double_swap_budget or m)
    chosen = rng.choice(len(pairs), size=pair_budget, replace=False)
    current, current_eval = solution, evaluation
    for pair_idx in chosen:
        c1, c2 = pairs[int(pair_idx)]
        items1 = sampler.instance.classes[c1].items
        items2 = sampler.instance.classes[c2].items
        total = sum(float(surrogate[ci][g]) for ci, g in enumerate(current.genes))
        base = (
            total
            - float(surrogate[c1][current.genes[c1]])
            - float(surrogate[c2][current.genes[c2]])
        )
        cost_base = items1[current.genes[c1]].cost + items2[current.genes[c2]].cost
        accepted = False
        for j1 in range(len(items1)):
            if j1 == current.genes[c1]:
                continue
            for j2 in range(len(items2)):
                if j2 == current.genes[c2]:
                    continue
                if base + float(surrogate[c1][j1]) + float(surrogate[c2][j2]) > capacity:
                    continue
                # Same short-circuit as the single swap: a costlier pair can
                # never be accepted, so don't pay for its evaluation.
                if items1[j1].cost + items2[j2].cost > cost_base:
                    continue
                candidate = current.replaced(c1, j1).replaced(c2, j2)
                cand_eval = _evaluate(sampler, candidate, cfg, rng, budget)
                if _improves(cand_eval, current_eval):
                    current, current_eval = candidate, cand_eval
                    accepted = True
                    break
            if accepted:
                break
    return current, current_eval


def local_search_degradation(
    instance_or_sampler,
    solution: Solution,
    evaluation: Evaluation,
    cfg: SolverConfig,
    rng: np.random.Generator,
    budget: Optional[_Budget] = None,
) -> tuple[Solution, Evaluation]:
    """Diversification: one random replacement, kept if it stays feasible.

    The move is accepted when it is surrogate-feasible and its estimated CL
    still meets the required confidence, even if the cost rises; this lets
    the search step across narrow feasible ridges.
    """
    sampler = as_sampler(instance_or_sampler)
    budget = budget if budget is not None else _Budget()
    surrogate = sampler.surrogate_weights(cfg.surrogate)
    ci = int(rng.integers(0, sampler.instance.class_count))
    size = len(sampler.instance.classes[ci])
    if size < 2:
        return solution, evaluation
    j = int(rng.integers(0, size - 1))
    if j >= solution.genes[ci]:
        j += 1  # uniform over the alternatives
    total = sum(float(surrogate[c][g]) for c, g in enumerate(solution.genes))
    new_total = total - float(surrogate[ci][solution.genes[ci]]) + float(surrogate[ci][j])
    if new_total > sampler.capacity:
        return solution, evaluation
    candidate = solution.replaced(ci, j)
    cand_eval = _evaluate(sampler, candidate, cfg, rng, budget)
    if cand_eval.p_hat >= sampler.required_confidence:
        return candidate, cand_eval
    return solution, evaluation


def local_search(
    instance_or_sampler,
    solution: Solution,
    evaluation: Evaluation,
    cfg: SolverConfig,
    rng: np.random.Generator,
    budget: Optional[_Budget] = None,
) -> tuple[Solution, Evaluation]:
    """Single swap, then double swap, then degradation, threading the result."""
    sampler = as_sampler(instance_or_sampler)
    budget = budget if budget is not None else _Budget()
    s, e = local_search_single_swap(sampler, solution, evaluation, cfg, rng, budget)
    s, e = local_search_double_swap(sampler, s, e, cfg, rng, budget)
    s, e = local_search_degradation(sampler, s, e, cfg, rng, budget)
    return s, e


# --- main loop ------------------------------------------------------------


def _feasible_front_snapshot(
    population: Sequence[tuple[Solution, Evaluation]],
) -> tuple[tuple[float, float], ...]:
    feasible = [e for _, e in population if e.feasible]
    if not feasible:
        return ()
    fronts = nondominated_sort(feasible)
    points = sorted((feasible[i].cost, feasible[i].p_hat) for i in fronts[0])
    return tuple(points)


def run(instance_or_sampler: Instance | InstanceSampler, cfg: SolverConfig) -> RunResult:
    """Run the configured solver variant; deterministic given ``cfg.run_seed``."""
    sampler = as_sampler(instance_or_sampler)
    started = time.perf_counter()
    budget = _Budget()
    sizes = sampler.class_sizes
    variant = cfg.variant

    init_rng = derive_rng(cfg.run_seed, "init")
    if variant.uses_hybrid_init:
        genes = hybrid_initialization(sampler, cfg, init_rng)
    else:
        genes = _uniform_population(sampler, cfg, init_rng)
    population: list[tuple[Solution, Evaluation]] = []
    for idx, sol in enumerate(genes):
        ev = _evaluate(sampler, sol, cfg, derive_rng(cfg.run_seed, "eval", 0, idx), budget)
        population.append((sol, ev))

    stats = [
        GenerationStats(
            generation=0,
            evaluations=budget.evaluations,
            samples=budget.samples,
            feasible_count=sum(1 for _, e in population if e.feasible),
            front=_feasible_front_snapshot(population),
        )
    ]

    generations_run = 0
    for gen in range(1, cfg.max_generations + 1):
        if cfg.time_limit_s is not None and time.perf_counter() - started >= cfg.time_limit_s:
            break
        evals_before = budget.evaluations
        samples_before = budget.samples

        # Variation: binary tournament on (rank, crowding), then SBX + mutation.
        var_rng = derive_rng(cfg.run_seed, "var", gen)
        ranks, crowding = rank_and_crowd([e for _, e in population])
        offspring: list[Solution] = []
        while len(offspring) < cfg.population_size:
            i1 = binary_tournament(ranks, crowding, var_rng)
            i2 = binary_tournament(ranks, crowding, var_rng)
            c1, c2 = crossover(
                population[i1][0], population[i2][0], sizes, cfg.variation, var_rng
            )
            offspring.append(mutate(c1, sizes, cfg.variation, var_rng))
            if len(offspring) < cfg.population_size:
                offspring.append(mutate(c2, sizes, cfg.variation, var_rng))

        # Parents are re-evaluated fresh each generation (no estimate reuse
        # across generations); local-search outputs keep their own final
        # internal estimate and are appended alongside their origin.
        merged: list[list] = [[sol, None] for sol, _ in population]
        merged.extend([sol, None] for sol in offspring)
        if variant.uses_local_search and cfg.local_search_prob > 0.0:
            gate_rng = derive_rng(cfg.run_seed, "ls-gate", gen)
            appended = []
            for idx in range(len(merged)):
                if gate_rng.random() >= cfg.local_search_prob:
                    continue
                sol = merged[idx][0]
                if merged[idx][1] is None:
                    merged[idx][1] = _evaluate(
                        sampler, sol, cfg, derive_rng(cfg.run_seed, "eval", gen, idx), budget
                    )
                ls_rng = derive_rng(cfg.run_seed, "ls", gen, idx)
                improved = local_search(sampler, sol, merged[idx][1], cfg, ls_rng, budget)
                appended.append(list(improved))
            merged.extend(appended)
        for idx, entry in enumerate(merged):
            if entry[1] is None:
                entry[1] = _evaluate(
                    sampler, entry[0], cfg, derive_rng(cfg.run_seed, "eval", gen, idx), budget
                )

        population = environmental_selection(
            [(s, e) for s, e in merged], cfg.population_size
        )
        generations_run = gen
        stats.append(
            GenerationStats(
                generation=gen,
                evaluations=budget.evaluations - evals_before,
                samples=budget.samples - samples_before,
                feasible_count=sum(1 for _, e in population if e.feasible),
                front=_feasible_front_snapshot(population),
            )
        )

    return RunResult(
        label=sampler.instance.label,
        variant=variant.value,
        run_seed=cfg.run_seed,
        population=population,
        per_generation=stats,
        total_evaluations=budget.evaluations,
        total_samples=budget.samples,
        generations_run=generations_run,
        wall_time_s=time.perf_counter() - started,
    )


def config_for_variant(base: SolverConfig, variant: Variant) -> SolverConfig:
    return replace(base, variant=variant)
