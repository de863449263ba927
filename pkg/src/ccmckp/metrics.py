"""Front quality metrics: hypervolume, IGD, IGD+, feasible-solution ratio.

Objective points live in the minimization plane (cost, neg_cl) with
``neg_cl = -confidence`` in [-1, 0]. The reference point for hypervolume is
placed slightly beyond the nadir of the pooled non-dominated set, and the
reference set approximating the true front is that pooled set itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .instances import Instance
from .moea import Solution
from .sampling import InstanceSampler, as_sampler

DEFAULT_REFERENCE_MARGIN = 0.1
MIN_MARGIN_ABS = 1e-6


class ObjectivePoint(NamedTuple):
    cost: float
    neg_cl: float


def _check_point(p: ObjectivePoint) -> ObjectivePoint:
    if not -1.0 <= p.neg_cl <= 0.0:
        raise ValueError(f"neg_cl must lie in [-1, 0], got {p.neg_cl}")
    return ObjectivePoint(float(p.cost), float(p.neg_cl))


def _weakly_dominates(a: ObjectivePoint, b: ObjectivePoint) -> bool:
    return a.cost <= b.cost and a.neg_cl <= b.neg_cl


def nondominated_filter(points: Iterable[ObjectivePoint]) -> list[ObjectivePoint]:
    """Distinct points not weakly dominated by any other point, cost-ascending."""
    unique = sorted(set(ObjectivePoint(float(c), float(n)) for c, n in points))
    kept: list[ObjectivePoint] = []
    best_neg = math.inf
    for p in unique:  # cost ascending, neg_cl ascending within cost ties
        if p.neg_cl < best_neg:
            kept.append(p)
            best_neg = p.neg_cl
    return kept


@dataclass(frozen=True)
class ReferenceData:
    ref_point: ObjectivePoint
    ref_set: tuple[ObjectivePoint, ...]
    margin: float


def build_reference(
    fronts: Iterable[Iterable[ObjectivePoint]],
    margin: float = DEFAULT_REFERENCE_MARGIN,
) -> ReferenceData:
    """Pool fronts, keep the global non-dominated set, and place the
    hypervolume reference point ``margin`` of each objective's range beyond
    the nadir (at least ``MIN_MARGIN_ABS``)."""
    pooled = [(float(c), float(n)) for front in fronts for c, n in front]
    if not pooled:
        raise ValueError("cannot build a reference from an empty union of fronts")
    ref_set = nondominated_filter(ObjectivePoint(c, n) for c, n in pooled)
    costs = [p.cost for p in ref_set]
    negs = [p.neg_cl for p in ref_set]
    cost_pad = max(margin * (max(costs) - min(costs)), MIN_MARGIN_ABS)
    neg_pad = max(margin * (max(negs) - min(negs)), MIN_MARGIN_ABS)
    ref_point = ObjectivePoint(max(costs) + cost_pad, max(negs) + neg_pad)
    return ReferenceData(ref_point=ref_point, ref_set=tuple(ref_set), margin=margin)


def hypervolume(front: Sequence[ObjectivePoint], ref_point: ObjectivePoint) -> float:
    """Exact 2-D hypervolume by sort-and-sweep.

    Points that do not weakly dominate the reference point contribute nothing.
    """
    in_bounds = [
        ObjectivePoint(float(c), float(n))
        for c, n in front
        if c <= ref_point.cost and n <= ref_point.neg_cl
    ]
    if not in_bounds:
        return 0.0
    skyline = nondominated_filter(in_bounds)
    area = 0.0
    for i, p in enumerate(skyline):
        next_cost = skyline[i + 1].cost if i + 1 < len(skyline) else ref_point.cost
        area += (next_cost - p.cost) * (ref_point.neg_cl - p.neg_cl)
    return area


def igd(front: Sequence[ObjectivePoint], ref_set: Sequence[ObjectivePoint]) -> float:
    """Mean Euclidean distance from each reference point to its nearest
    front point; an empty front scores infinite."""
    if len(ref_set) == 0:
        raise ValueError("ref_set must be non-empty")
    if len(front) == 0:
        return math.inf
    f = np.asarray(front, dtype=float)
    r = np.asarray(ref_set, dtype=float)
    diff = r[:, None, :] - f[None, :, :]
    dists = np.sqrt((diff**2).sum(axis=2))
    return float(dists.min(axis=1).mean())


def igd_plus(front: Sequence[ObjectivePoint], ref_set: Sequence[ObjectivePoint]) -> float:
    """IGD with the one-sided distance max(front - ref, 0) per coordinate,
    which makes the indicator Pareto-compliant."""
    if len(ref_set) == 0:
        raise ValueError("ref_set must be non-empty")
    if len(front) == 0:
        return math.inf
    f = np.asarray(front, dtype=float)
    r = np.asarray(ref_set, dtype=float)
    diff = np.maximum(f[None, :, :] - r[:, None, :], 0.0)
    dists = np.sqrt((diff**2).sum(axis=2))
    return float(dists.min(axis=1).mean())


def fsr(
    population: Sequence[Solution],
    instance_or_sampler: Instance | InstanceSampler,
    reference_samples: int,
    rng: np.random.Generator,
) -> float:
    """Fraction of the population whose reference confidence level (a fresh
    high-budget estimate per member) meets the required confidence."""
    if len(population) == 0:
        raise ValueError("population must be non-empty")
    if reference_samples < 1:
        raise ValueError("reference_samples must be >= 1")
    sampler = as_sampler(instance_or_sampler)
    threshold = sampler.required_confidence
    feasible = 0
    for sol in population:
        hits = sampler.count_hits(sol.genes, reference_samples, rng)
        if hits / reference_samples >= threshold:
            feasible += 1
    return feasible / len(population)


def front_from_evaluations(pairs) -> list[ObjectivePoint]:
    """Objective points of the feasible members of an evaluated population."""
    return [
        _check_point(ObjectivePoint(e.cost, e.neg_cl)) for _, e in pairs if e.feasible
    ]
