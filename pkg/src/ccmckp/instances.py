"""Problem instances: data model, benchmark generators, serialization.

An instance is a set of disjoint item classes; a solution picks exactly one
item per class. Items have a deterministic cost and a stochastic weight known
only through sampling. The capacity constraint is probabilistic: the chosen
items' total weight must stay within capacity with probability at least
``required_confidence``.

Two seeded benchmark families are generated at six scales each:

* ``lab`` -- synthetic weights cycling through five parametric families;
* ``app`` -- windowed-retransmission delays (network-configuration flavor).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from ._rng import derive_rng
from .distributions import WeightSpec, WeightSpecError, analytic_moments, scale_spec

SCHEMA_INSTANCE = "ccmckp-instance/1"

SCALE_IDS = ("ls1", "ls2", "ls3", "ls4", "ls5", "ls6")

# (classes, items per class, bank size, lab capacity, app capacity);
# required confidence is 0.9 throughout.
SCALE_TABLE: dict[str, tuple[int, int, int, float, float]] = {
    "ls1": (10, 10, 500, 20.0, 35.0),
    "ls2": (10, 20, 500, 14.0, 15.0),
    "ls3": (20, 10, 500, 30.0, 41.0),
    "ls4": (30, 10, 500, 45.0, 60.0),
    "ls5": (40, 10, 500, 58.0, 87.0),
    "ls6": (50, 10, 500, 68.0, 97.0),
}

REQUIRED_CONFIDENCE = 0.9

# --- generator constants -----------------------------------------------------
# Within each class the expected item weight spans HEAVY..LIGHT fractions of a
# reference scale, with cost anti-correlated to expected weight.
#
# Lab items are drawn from a shared catalog scale (LAB_REF_SHARE, the
# per-class capacity share of the smallest benchmark row) rather than being
# renormalized per row. Capacity per class tightens along the benchmark rows,
# so the chance-feasible region shrinks from a moderate slice at ls1 to a
# vanishing corner at ls6: feasibility becomes *sparse* exactly where the
# instances grow. The light end of the band keeps the all-light selection
# inside the mean + 3 sd surrogate even at the tightest row, so greedy repair
# always succeeds and can anchor a population in the feasible corner.
LAB_REF_SHARE = 2.0
LAB_HEAVY_FRACTION = 1.75
LAB_LIGHT_FRACTION = 0.45
# Retransmission delays carry high intrinsic spread (uniform within a window
# plus window jumps: sd is ~0.5-0.8 of the mean), so a shared-scale band would
# make whole rows surrogate-infeasible; app items model per-deployment option
# catalogs instead and are sized against each row's own capacity share, with
# the band low enough that the light half stays surrogate-feasible while the
# cheap/heavy end still breaks the chance constraint.
APP_HEAVY_FRACTION = 0.85
APP_LIGHT_FRACTION = 0.25
FRACTION_JITTER = 0.04
# Relative spread of lab item weights: small enough that per-item 3-sigma
# surrogate cushions stay moderate (the light corner must fit capacity), large
# enough that confidence levels vary smoothly along the cost axis.
CV_RANGE = (0.05, 0.15)
COST_RANGE = (1, 100)
LAB_FAMILY_CYCLE = ("uniform", "truncated_normal", "fatigue_life", "bimodal", "gamma")
# Birnbaum-Saunders shape range: keeps skew moderate.
FATIGUE_SHAPE_RANGE = (0.15, 0.45)
BIMODAL_SEPARATION_RANGE = (0.15, 0.35)
BIMODAL_WEIGHT_RANGE = (0.35, 0.65)
BIMODAL_COMPONENT_CV_RANGE = (0.04, 0.10)
GAMMA_SHAPE_CLIP = (1.5, 120.0)
# Retransmission items: per-attempt success drawn per item; the failure
# sentinel is a finite constant above every benchmark capacity so a failed
# sample always violates the constraint while bank statistics stay finite.
APP_SUCCESS_RANGE = (0.90, 0.98)
APP_ATTEMPTS = 4
APP_FAILURE_WEIGHT = 200.0


class InstanceError(ValueError):
    """Raised when an instance violates its structural invariants."""


class InstanceFormatError(ValueError):
    """Raised when a serialized instance document cannot be parsed."""


@dataclass(frozen=True)
class Item:
    cost: float
    weight: WeightSpec

    def __post_init__(self):
        if not (math.isfinite(self.cost) and self.cost >= 0):
            raise InstanceError(f"item cost must be finite and >= 0, got {self.cost}")


@dataclass(frozen=True)
class ItemClass:
    items: tuple[Item, ...]

    def __post_init__(self):
        if len(self.items) == 0:
            raise InstanceError("item class must contain at least one item")

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class Instance:
    label: str
    seed: int
    capacity: float
    required_confidence: float
    empirical_bank_size: int
    classes: tuple[ItemClass, ...] = field(repr=False)

    def __post_init__(self):
        if len(self.classes) == 0:
            raise InstanceError("instance must contain at least one class")
        if not (math.isfinite(self.capacity) and self.capacity > 0):
            raise InstanceError(f"capacity must be > 0, got {self.capacity}")
        if not 0.0 < self.required_confidence < 1.0:
            raise InstanceError(
                f"required_confidence must lie in (0, 1), got {self.required_confidence}"
            )
        if self.empirical_bank_size < 1:
            raise InstanceError("empirical_bank_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InstanceError("seed must fit in an unsigned 64-bit integer")
        for ci, cls in enumerate(self.classes):
            for ij, item in enumerate(cls.items):
                spec = item.weight
                if spec.family == "app_retransmission":
                    if spec.param("failure_weight") <= self.capacity:
                        raise InstanceError(
                            f"classes[{ci}].items[{ij}]: retransmission failure_weight "
                            f"must exceed the capacity {self.capacity}"
                        )

    @property
    def class_count(self) -> int:
        return len(self.classes)

    @property
    def class_sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.classes)

    def item(self, class_index: int, item_index: int) -> Item:
        return self.classes[class_index].items[item_index]


def validate_solution_genes(instance: Instance, genes: Iterable[int]) -> tuple[int, ...]:
    genes = tuple(int(g) for g in genes)
    if len(genes) != instance.class_count:
        raise InstanceError(
            f"solution has {len(genes)} genes for {instance.class_count} classes"
        )
    for ci, g in enumerate(genes):
        if not 0 <= g < len(instance.classes[ci]):
            raise InstanceError(
                f"gene {ci} selects item {g} outside class of size {len(instance.classes[ci])}"
            )
    return genes


# --- generators ---------------------------------------------------------------


def _scale_params(scale_id: str) -> tuple[int, int, int, float, float]:
    if scale_id not in SCALE_TABLE:
        raise ValueError(f"unknown scale {scale_id!r}; expected one of {SCALE_IDS}")
    return SCALE_TABLE[scale_id]


def _target_fractions(n: int, heavy: float, light: float, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        base = np.full(1, 0.5 * (heavy + light))
    else:
        base = heavy - np.arange(n) * (heavy - light) / (n - 1)
    jitter = rng.uniform(-FRACTION_JITTER, FRACTION_JITTER, size=n)
    return np.maximum(base + jitter, 0.05)


def _draw_unit_lab_spec(family: str, rng: np.random.Generator) -> WeightSpec:
    """Draw family parameters at unit location scale (mean near 1)."""
    cv = float(rng.uniform(*CV_RANGE))
    if family == "uniform":
        half = math.sqrt(3.0) * cv
        return WeightSpec("uniform", {"low": 1.0 - half, "high": 1.0 + half})
    if family == "truncated_normal":
        return WeightSpec(
            "truncated_normal",
            {"mu": 1.0, "sigma": cv, "low": 1.0 - 3.0 * cv, "high": 1.0 + 3.0 * cv},
        )
    if family == "fatigue_life":
        g = float(rng.uniform(*FATIGUE_SHAPE_RANGE))
        return WeightSpec("fatigue_life", {"shape": g, "scale": 1.0 / (1.0 + 0.5 * g * g)})
    if family == "bimodal":
        w1 = float(rng.uniform(*BIMODAL_WEIGHT_RANGE))
        delta = float(rng.uniform(*BIMODAL_SEPARATION_RANGE))
        s1 = float(rng.uniform(*BIMODAL_COMPONENT_CV_RANGE))
        s2 = float(rng.uniform(*BIMODAL_COMPONENT_CV_RANGE))
        mu1 = 1.0 - delta
        mu2 = (1.0 - w1 * mu1) / (1.0 - w1)
        return WeightSpec(
            "bimodal",
            {"weight1": w1, "mu1": mu1, "sigma1": s1, "mu2": mu2, "sigma2": s2},
        )
    if family == "gamma":
        shape = min(max(1.0 / (cv * cv), GAMMA_SHAPE_CLIP[0]), GAMMA_SHAPE_CLIP[1])
        return WeightSpec("gamma", {"shape": shape, "scale": 1.0 / shape})
    raise ValueError(f"not a lab family: {family}")


def _build_class(
    specs: list[WeightSpec], rng: np.random.Generator
) -> ItemClass:
    """Assign costs anti-correlated with expected weight and assemble the class."""
    n = len(specs)
    means = np.array([analytic_moments(s)[0] for s in specs])
    costs = np.sort(rng.choice(np.arange(COST_RANGE[0], COST_RANGE[1] + 1), size=n, replace=False))
    # Heaviest expected weight gets the cheapest cost; ties broken by item index.
    order = np.lexsort((np.arange(n), -means))
    item_costs = np.empty(n)
    for rank, idx in enumerate(order):
        item_costs[idx] = costs[rank]
    return ItemClass(tuple(Item(cost=float(c), weight=s) for c, s in zip(item_costs, specs)))


def generate_lab_instance(scale_id: str, seed: int) -> Instance:
    """Generate a synthetic instance at one of the six benchmark scales."""
    m, n, bank, w_lab, _ = _scale_params(scale_id)
    rng = derive_rng(int(seed), "gen-lab", SCALE_IDS.index(scale_id))
    classes = []
    for ci in range(m):
        fractions = _target_fractions(n, LAB_HEAVY_FRACTION, LAB_LIGHT_FRACTION, rng)
        specs = []
        for r in range(n):
            family = LAB_FAMILY_CYCLE[(ci * n + r) % len(LAB_FAMILY_CYCLE)]
            unit = _draw_unit_lab_spec(family, rng)
            mean_u, _ = analytic_moments(unit)
            target_mean = fractions[r] * LAB_REF_SHARE
            specs.append(scale_spec(unit, target_mean / mean_u))
        classes.append(_build_class(specs, rng))
    return Instance(
        label=f"LAB-{scale_id}",
        seed=int(seed),
        capacity=w_lab,
        required_confidence=REQUIRED_CONFIDENCE,
        empirical_bank_size=bank,
        classes=tuple(classes),
    )


def _app_conditional_unit_moments(success_prob: float, attempts: int) -> tuple[float, float]:
    """Unit-window delay moments conditional on success within the attempt budget."""
    fail = (1.0 - success_prob) ** attempts
    mean = 0.0
    second = 0.0
    surv = 1.0
    for k in range(1, attempts + 1):
        mass = success_prob * surv / (1.0 - fail)
        surv *= 1.0 - success_prob
        base = float(k - 1)
        mean += mass * (base + 0.5)
        second += mass * (base * base + base + 1.0 / 3.0)
    return mean, math.sqrt(max(second - mean * mean, 0.0))


def generate_app_instance(scale_id: str, seed: int) -> Instance:
    """Generate a retransmission-delay instance at one of the six scales."""
    m, n, bank, _, w_app = _scale_params(scale_id)
    rng = derive_rng(int(seed), "gen-app", SCALE_IDS.index(scale_id))
    per_class_share = w_app / m
    classes = []
    for ci in range(m):
        fractions = _target_fractions(n, APP_HEAVY_FRACTION, APP_LIGHT_FRACTION, rng)
        specs = []
        for r in range(n):
            p_succ = float(rng.uniform(*APP_SUCCESS_RANGE))
            mean_u, _ = _app_conditional_unit_moments(p_succ, APP_ATTEMPTS)
            target_mean = fractions[r] * per_class_share
            window = target_mean / mean_u
            specs.append(
                WeightSpec(
                    "app_retransmission",
                    {
                        "success_prob": p_succ,
                        "window": window,
                        "attempts": APP_ATTEMPTS,
                        "failure_weight": APP_FAILURE_WEIGHT,
                    },
                )
            )
        classes.append(_build_class(specs, rng))
    return Instance(
        label=f"APP-{scale_id}",
        seed=int(seed),
        capacity=w_app,
        required_confidence=REQUIRED_CONFIDENCE,
        empirical_bank_size=bank,
        classes=tuple(classes),
    )


def generate_instance(family: str, scale_id: str, seed: int) -> Instance:
    if family == "lab":
        return generate_lab_instance(scale_id, seed)
    if family == "app":
        return generate_app_instance(scale_id, seed)
    raise ValueError(f"unknown instance family {family!r} (expected 'lab' or 'app')")


# --- serialization ------------------------------------------------------------


def instance_to_document(instance: Instance) -> dict:
    return {
        "schema": SCHEMA_INSTANCE,
        "label": instance.label,
        "seed": instance.seed,
        "class_count": instance.class_count,
        "capacity": instance.capacity,
        "required_confidence": instance.required_confidence,
        "empirical_bank_size": instance.empirical_bank_size,
        "classes": [
            {
                "items": [
                    {
                        "cost": item.cost,
                        "weight": {
                            "family": item.weight.family,
                            "params": {k: item.weight.params[k] for k in sorted(item.weight.params)},
                        },
                    }
                    for item in cls.items
                ]
            }
            for cls in instance.classes
        ],
    }


def write_instance(instance: Instance, destination: str | Path | IO[str]) -> None:
    """Serialize an instance as a versioned JSON document."""
    doc = instance_to_document(instance)
    text = json.dumps(doc, indent=2) + "\n"
    if isinstance(destination, (str, Path)):
        Path(destination).write_text(text, encoding="utf-8")
    else:
        destination.write(text)


def _req(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{path or 'document'}: expected an object")
    if key not in obj:
        raise InstanceFormatError(f"missing field: {path + '.' if path else ''}{key}")
    return obj[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{path}: expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"{path}: expected an integer, got {type(value).__name__}")
    return value


def instance_from_document(doc: dict) -> Instance:
    schema = _req(doc, "schema", "")
    if schema != SCHEMA_INSTANCE:
        raise InstanceFormatError(f"schema: expected {SCHEMA_INSTANCE!r}, got {schema!r}")
    label = _req(doc, "label", "")
    if not isinstance(label, str):
        raise InstanceFormatError("label: expected a string")
    seed = _integer(_req(doc, "seed", ""), "seed")
    class_count = _integer(_req(doc, "class_count", ""), "class_count")
    capacity = _number(_req(doc, "capacity", ""), "capacity")
    confidence = _number(_req(doc, "required_confidence", ""), "required_confidence")
    bank = _integer(_req(doc, "empirical_bank_size", ""), "empirical_bank_size")
    raw_classes = _req(doc, "classes", "")
    if not isinstance(raw_classes, list):
        raise InstanceFormatError("classes: expected a list")
    if class_count != len(raw_classes):
        raise InstanceFormatError(
            f"class_count: declares {class_count} classes but {len(raw_classes)} are present"
        )
    classes = []
    for ci, raw_cls in enumerate(raw_classes):
        cpath = f"classes[{ci}]"
        raw_items = _req(raw_cls, "items", cpath)
        if not isinstance(raw_items, list) or not raw_items:
            raise InstanceFormatError(f"{cpath}.items: expected a non-empty list")
        items = []
        for ij, raw_item in enumerate(raw_items):
            ipath = f"{cpath}.items[{ij}]"
            cost = _number(_req(raw_item, "cost", ipath), f"{ipath}.cost")
            raw_weight = _req(raw_item, "weight", ipath)
            family = _req(raw_weight, "family", f"{ipath}.weight")
            raw_params = _req(raw_weight, "params", f"{ipath}.weight")
            if not isinstance(raw_params, dict):
                raise InstanceFormatError(f"{ipath}.weight.params: expected an object")
            params = {
                k: _number(v, f"{ipath}.weight.params.{k}") for k, v in raw_params.items()
            }
            try:
                spec = WeightSpec(family=family, params=params)
                items.append(Item(cost=cost, weight=spec))
            except (WeightSpecError, InstanceError) as exc:
                raise InstanceFormatError(f"{ipath}: {exc}") from exc
        classes.append(ItemClass(tuple(items)))
    try:
        return Instance(
            label=label,
            seed=seed,
            capacity=capacity,
            required_confidence=confidence,
            empirical_bank_size=bank,
            classes=tuple(classes),
        )
    except InstanceError as exc:
        raise InstanceFormatError(str(exc)) from exc


def read_instance(source: str | Path | IO[str]) -> Instance:
    """Parse an instance document, reporting schema problems with field paths."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    return instance_from_document(doc)


def dumps_instance(instance: Instance) -> str:
    buf = io.StringIO()
    write_instance(instance, buf)
    return buf.getvalue()
