"""Multi-objective EA core: encoding, dominance, sorting, selection, variation.

Solutions are integer vectors, one selected item index per class, so the
one-item-per-class structure holds by construction. Objectives are
(total cost, negated confidence level), both minimized. Selection uses
constrained dominance: feasible beats infeasible, infeasible solutions
compare by constraint violation, feasible ones by Pareto dominance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .evaluator import ClEstimate
from .instances import Instance, validate_solution_genes


@dataclass(frozen=True)
class Solution:
    """One item index per class."""

    genes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(int(g) for g in self.genes))

    @classmethod
    def of(cls, genes: Iterable[int]) -> "Solution":
        return cls(tuple(int(g) for g in genes))

    def replaced(self, class_index: int, item_index: int) -> "Solution":
        genes = list(self.genes)
        genes[class_index] = int(item_index)
        return Solution(tuple(genes))

    def __len__(self) -> int:
        return len(self.genes)


@dataclass(frozen=True)
class Evaluation:
    """Objective values plus constraint status for one solution."""

    cost: float
    cl: ClEstimate
    feasible: bool
    violation: float

    @property
    def p_hat(self) -> float:
        return self.cl.p_hat

    @property
    def neg_cl(self) -> float:
        return -self.cl.p_hat


def make_evaluation(cost: float, cl: ClEstimate, required_confidence: float) -> Evaluation:
    violation = max(0.0, required_confidence - cl.p_hat)
    return Evaluation(cost=float(cost), cl=cl, feasible=violation == 0.0, violation=violation)


def evaluate_cost(instance: Instance, solution: Solution) -> float:
    """Exact total cost of the selected items."""
    genes = validate_solution_genes(instance, solution.genes)
    return sum(instance.classes[ci].items[g].cost for ci, g in enumerate(genes))


def constrained_dominates(a: Evaluation, b: Evaluation) -> bool:
    """Constrained-dominance comparison on (cost, neg_cl)."""
    if a.feasible and not b.feasible:
        return True
    if not a.feasible and b.feasible:
        return False
    if not a.feasible and not b.feasible:
        return a.violation < b.violation
    if a.cost <= b.cost and a.neg_cl <= b.neg_cl:
        return a.cost < b.cost or a.neg_cl < b.neg_cl
    return False


def nondominated_sort(evaluations: Sequence[Evaluation]) -> list[list[int]]:
    """Partition indices into fronts (pairwise comparisons, fine for two objectives)."""
    n = len(evaluations)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if constrained_dominates(evaluations[i], evaluations[j]):
                dominated_by[i].append(j)
                domination_count[j] += 1
            elif constrained_dominates(evaluations[j], evaluations[i]):
                dominated_by[j].append(i)
                domination_count[i] += 1
    fronts: list[list[int]] = []
    current = [i for i in range(n) if domination_count[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
    return fronts


def crowding_distance(front: Sequence[Evaluation]) -> np.ndarray:
    """NSGA-II crowding distance over (cost, neg_cl), normalized per objective."""
    n = len(front)
    if n == 0:
        raise ValueError("front must be non-empty")
    distance = np.zeros(n)
    if n <= 2:
        return np.full(n, math.inf)
    for key in (lambda e: e.cost, lambda e: e.neg_cl):
        values = np.array([key(e) for e in front])
        order = np.argsort(values, kind="stable")
        distance[order[0]] = math.inf
        distance[order[-1]] = math.inf
        span = values[order[-1]] - values[order[0]]
        if span <= 0.0:
            continue
        for pos in range(1, n - 1):
            idx = order[pos]
            if distance[idx] == math.inf:
                continue
            distance[idx] += (values[order[pos + 1]] - values[order[pos - 1]]) / span
    return distance


def environmental_selection(
    merged: Sequence[tuple[Solution, Evaluation]], target_size: int
) -> list[tuple[Solution, Evaluation]]:
    """Keep ``target_size`` members: whole fronts in rank order, the split
    front by descending crowding distance (ties: lower cost, then input order)."""
    if target_size > len(merged):
        raise ValueError(f"target_size {target_size} exceeds population of {len(merged)}")
    fronts = nondominated_sort([ev for _, ev in merged])
    selected: list[tuple[Solution, Evaluation]] = []
    for front in fronts:
        if len(selected) + len(front) <= target_size:
            selected.extend(merged[i] for i in front)
            if len(selected) == target_size:
                break
            continue
        distances = crowding_distance([merged[i][1] for i in front])
        ranked = sorted(
            range(len(front)),
            key=lambda pos: (-distances[pos], merged[front[pos]][1].cost, front[pos]),
        )
        needed = target_size - len(selected)
        selected.extend(merged[front[pos]] for pos in ranked[:needed])
        break
    return selected


@dataclass(frozen=True)
class VariationConfig:
    """Simulated binary crossover and polynomial mutation settings.

    ``mutation_prob`` of ``None`` means one expected mutated gene per child
    (probability 1/m).
    """

    crossover_prob: float = 0.9
    crossover_index: float = 15.0
    mutation_prob: float | None = None
    mutation_index: float = 20.0

    def __post_init__(self):
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must lie in [0, 1]")
        if self.crossover_index < 0 or self.mutation_index < 0:
            raise ValueError("distribution indices must be >= 0")


def _round_clamp(value: float, size: int) -> int:
    idx = int(math.floor(value + 0.5))
    if idx < 0:
        return 0
    if idx >= size:
        return size - 1
    return idx


def crossover(
    p1: Solution,
    p2: Solution,
    class_sizes: Sequence[int],
    cfg: VariationConfig,
    rng: np.random.Generator,
) -> tuple[Solution, Solution]:
    """Simulated binary crossover on the real-relaxed item indices.

    Offspring indices are rounded to the nearest integer and clamped to the
    class bounds, so children always encode valid selections.
    """
    if rng.random() >= cfg.crossover_prob:
        return Solution(p1.genes), Solution(p2.genes)
    eta = cfg.crossover_index
    c1 = list(p1.genes)
    c2 = list(p2.genes)
    for i, size in enumerate(class_sizes):
        if rng.random() > 0.5:
            continue
        x1, x2 = float(p1.genes[i]), float(p2.genes[i])
        if x1 == x2:
            continue
        u = rng.random()
        if u <= 0.5:
            beta = (2.0 * u) ** (1.0 / (eta + 1.0))
        else:
            beta = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))
        mean = 0.5 * (x1 + x2)
        diff = 0.5 * beta * (x2 - x1)
        c1[i] = _round_clamp(mean - diff, size)
        c2[i] = _round_clamp(mean + diff, size)
    return Solution(tuple(c1)), Solution(tuple(c2))


def mutate(
    s: Solution,
    class_sizes: Sequence[int],
    cfg: VariationConfig,
    rng: np.random.Generator,
) -> Solution:
    """Polynomial mutation on the real-relaxed item indices (round + clamp)."""
    m = len(class_sizes)
    p_m = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / m
    eta = cfg.mutation_index
    genes = list(s.genes)
    for i, size in enumerate(class_sizes):
        if rng.random() >= p_m:
            continue
        u = rng.random()
        if size <= 1:
            continue
        lo, hi = 0.0, float(size - 1)
        x = float(genes[i])
        d1 = (x - lo) / (hi - lo)
        d2 = (hi - x) / (hi - lo)
        exponent = 1.0 / (eta + 1.0)
        if u <= 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            delta = val**exponent - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            delta = 1.0 - val**exponent
        genes[i] = _round_clamp(x + delta * (hi - lo), size)
    return Solution(tuple(genes))


def binary_tournament(
    ranks: Sequence[int],
    crowding: Sequence[float],
    rng: np.random.Generator,
) -> int:
    """Pick the index winning a size-2 tournament on (rank, crowding distance)."""
    n = len(ranks)
    a = int(rng.integers(0, n))
    b = int(rng.integers(0, n))
    if ranks[a] != ranks[b]:
        return a if ranks[a] < ranks[b] else b
    if crowding[a] != crowding[b]:
        return a if crowding[a] > crowding[b] else b
    return min(a, b)


def rank_and_crowd(evaluations: Sequence[Evaluation]) -> tuple[list[int], list[float]]:
    """Front rank and per-front crowding distance for every member."""
    fronts = nondominated_sort(evaluations)
    ranks = [0] * len(evaluations)
    crowding = [0.0] * len(evaluations)
    for rank, front in enumerate(fronts):
        distances = crowding_distance([evaluations[i] for i in front])
        for pos, idx in enumerate(front):
            ranks[idx] = rank
            crowding[idx] = float(distances[pos])
    return ranks, crowding
