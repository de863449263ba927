"""Weight sampling oracles and surrogate statistics.

Each item gets a :class:`WeightOracle`: its distribution spec, a fixed
empirical bank of i.i.d. draws (size ``instance.empirical_bank_size``) used
for surrogate statistics, and the bank's mean/standard deviation. Banks are
derived deterministically from the instance seed, so surrogate statistics are
reproducible from the instance document alone.

Fresh evaluation draws are unlimited and never come from the bank.

The surrogate weight ``mean + lam * sd`` is a deterministic risk-adjusted
stand-in for a stochastic weight; selections whose surrogate total fits the
capacity are called surrogate-feasible and are almost always chance-feasible
as well (the per-item 3-sigma cushions add up across independent items).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import backends
from ._rng import derive_rng
from .distributions import WeightSpec, compile_row
from .instances import Instance, validate_solution_genes

DEFAULT_RISK_WEIGHT = 3.0


@dataclass(frozen=True)
class SurrogateConfig:
    """Risk-aversion weight for surrogate statistics (``lam`` >= 0)."""

    lam: float = DEFAULT_RISK_WEIGHT

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class WeightOracle:
    """Sampling oracle for one item: spec, compiled row, empirical bank."""

    spec: WeightSpec
    row: np.ndarray = field(repr=False)
    bank: np.ndarray = field(repr=False)
    mean: float
    stddev: float

    @classmethod
    def build(cls, spec: WeightSpec, bank_size: int, rng: np.random.Generator) -> "WeightOracle":
        row = compile_row(spec)
        bank = backends.fill_weights(row, int(bank_size), rng)
        bank.setflags(write=False)
        row.setflags(write=False)
        mean = float(np.mean(bank))
        stddev = float(np.std(bank, ddof=1)) if bank.size > 1 else 0.0
        return cls(spec=spec, row=row, bank=bank, mean=mean, stddev=stddev)


def draw_weight(oracle: WeightOracle, rng: np.random.Generator) -> float:
    """One fresh i.i.d. draw from the oracle's distribution."""
    return float(backends.fill_weights(oracle.row, 1, rng)[0])


def surrogate_weight(oracle: WeightOracle, cfg: SurrogateConfig) -> float:
    """Risk-adjusted weight: bank mean + lam * bank standard deviation."""
    return oracle.mean + cfg.lam * oracle.stddev


class InstanceSampler:
    """Bundles an instance with its oracles and the backend sampling tables."""

    def __init__(self, instance: Instance):
        self.instance = instance
        oracles: list[tuple[WeightOracle, ...]] = []
        for ci, cls in enumerate(instance.classes):
            class_oracles = []
            for ij, item in enumerate(cls.items):
                rng = derive_rng(instance.seed, "bank", ci, ij)
                class_oracles.append(
                    WeightOracle.build(item.weight, instance.empirical_bank_size, rng)
                )
            oracles.append(tuple(class_oracles))
        self.oracles: tuple[tuple[WeightOracle, ...], ...] = tuple(oracles)
        self._rows = tuple(
            np.ascontiguousarray([o.row for o in class_oracles])
            for class_oracles in self.oracles
        )
        self._surrogate_cache: dict[float, tuple[np.ndarray, ...]] = {}

    @property
    def capacity(self) -> float:
        return self.instance.capacity

    @property
    def required_confidence(self) -> float:
        return self.instance.required_confidence

    @property
    def class_sizes(self) -> tuple[int, ...]:
        return self.instance.class_sizes

    def oracle(self, class_index: int, item_index: int) -> WeightOracle:
        return self.oracles[class_index][item_index]

    def selection_table(self, genes: Sequence[int]) -> np.ndarray:
        """Stack the compiled rows of the selected items (one per class)."""
        return np.ascontiguousarray(
            [self._rows[ci][g] for ci, g in enumerate(genes)]
        )

    def draw_totals(self, genes: Sequence[int], n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` fresh i.i.d. draws of the selection's total weight."""
        return backends.fill_totals(self.selection_table(genes), int(n), rng)

    def count_hits(self, genes: Sequence[int], n: int, rng: np.random.Generator) -> int:
        """Number of ``n`` fresh total draws that fit the capacity."""
        totals = self.draw_totals(genes, n, rng)
        return int(np.count_nonzero(totals <= self.instance.capacity))

    def surrogate_weights(self, cfg: SurrogateConfig) -> tuple[np.ndarray, ...]:
        """Per-class arrays of surrogate weights, cached per lam."""
        cached = self._surrogate_cache.get(cfg.lam)
        if cached is None:
            cached = tuple(
                np.array([surrogate_weight(o, cfg) for o in class_oracles])
                for class_oracles in self.oracles
            )
            self._surrogate_cache[cfg.lam] = cached
        return cached

    def surrogate_total(self, genes: Sequence[int], cfg: SurrogateConfig) -> float:
        table = self.surrogate_weights(cfg)
        return sum(float(table[ci][g]) for ci, g in enumerate(genes))

    def min_surrogate_total(self, cfg: SurrogateConfig) -> float:
        return sum(float(np.min(w)) for w in self.surrogate_weights(cfg))

    def cost(self, genes: Sequence[int]) -> float:
        return sum(
            self.instance.classes[ci].items[g].cost for ci, g in enumerate(genes)
        )


def as_sampler(instance_or_sampler: Instance | InstanceSampler) -> InstanceSampler:
    if isinstance(instance_or_sampler, InstanceSampler):
        return instance_or_sampler
    return InstanceSampler(instance_or_sampler)


def as_genes(solution_or_genes) -> Iterable[int]:
    return getattr(solution_or_genes, "genes", solution_or_genes)


def draw_total_weight(
    instance_or_sampler: Instance | InstanceSampler,
    solution_or_genes,
    rng: np.random.Generator,
) -> float:
    """One fresh draw of a solution's total weight (sum of one draw per item)."""
    sampler = as_sampler(instance_or_sampler)
    genes = validate_solution_genes(sampler.instance, as_genes(solution_or_genes))
    return float(sampler.draw_totals(genes, 1, rng)[0])


def surrogate_total(
    instance_or_sampler: Instance | InstanceSampler,
    solution_or_genes,
    cfg: SurrogateConfig,
) -> float:
    """Sum of the selected items' surrogate weights."""
    sampler = as_sampler(instance_or_sampler)
    genes = validate_solution_genes(sampler.instance, as_genes(solution_or_genes))
    return sampler.surrogate_total(genes, cfg)
