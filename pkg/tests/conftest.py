"""Shared test fixtures and toy-instance builders."""

from pathlib import Path

import pytest

from ccmckp.distributions import WeightSpec
from ccmckp.instances import Instance, Item, ItemClass
from ccmckp.sampling import InstanceSampler

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO_ROOT / "fixtures"


def degenerate_spec(value: float) -> WeightSpec:
    """A weight that always samples exactly ``value``."""
    return WeightSpec("uniform", {"low": value, "high": value})


def toy_instance(
    class_items,
    capacity,
    required_confidence=0.9,
    seed=0,
    bank=8,
    label="toy",
) -> Instance:
    """Build an instance from [(cost, weight_value_or_spec), ...] per class."""
    classes = []
    for items in class_items:
        built = []
        for cost, weight in items:
            spec = weight if isinstance(weight, WeightSpec) else degenerate_spec(float(weight))
            built.append(Item(cost=float(cost), weight=spec))
        classes.append(ItemClass(tuple(built)))
    return Instance(
        label=label,
        seed=seed,
        capacity=float(capacity),
        required_confidence=required_confidence,
        empirical_bank_size=bank,
        classes=tuple(classes),
    )


@pytest.fixture(scope="session")
def lab_ls1():
    from ccmckp.instances import generate_lab_instance

    return generate_lab_instance("ls1", 42)


@pytest.fixture(scope="session")
def lab_ls1_sampler(lab_ls1):
    return InstanceSampler(lab_ls1)


def enumerate_exact_front(instance: Instance):
    """Exhaustive oracle for degenerate-weight toys: exact CLs are 0/1, so the
    true Pareto front is computed by enumerating every selection."""
    import itertools

    sampler_free_points = []
    sizes = instance.class_sizes
    for genes in itertools.product(*[range(s) for s in sizes]):
        cost = sum(instance.classes[ci].items[g].cost for ci, g in enumerate(genes))
        total = sum(
            instance.classes[ci].items[g].weight.param("low") for ci, g in enumerate(genes)
        )
        cl = 1.0 if total <= instance.capacity else 0.0
        if cl >= instance.required_confidence:
            sampler_free_points.append((cost, cl))
    # Pareto filter on (cost asc, cl desc); all feasible points have cl == 1.
    front = set()
    if sampler_free_points:
        min_cost = min(c for c, _ in sampler_free_points)
        front = {(min_cost, 1.0)}
    return front


def brute_force_fronts(evaluations):
    """Independent layering oracle: peel non-dominated sets one at a time."""
    from ccmckp.moea import constrained_dominates

    remaining = list(range(len(evaluations)))
    fronts = []
    while remaining:
        layer = [
            i
            for i in remaining
            if not any(
                constrained_dominates(evaluations[j], evaluations[i])
                for j in remaining
                if j != i
            )
        ]
        fronts.append(sorted(layer))
        remaining = [i for i in remaining if i not in layer]
    return fronts
