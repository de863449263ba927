"""Confidence-level estimation for candidate solutions.

The confidence level (CL) of a selection is the probability that its sampled
total weight fits the capacity. It is estimated empirically: the fraction of
fresh Monte-Carlo totals within capacity.

Two estimators are provided:

* :func:`estimate_cl_fixed` -- plain estimator at a fixed sample count;
* :func:`estimate_cl_staged` -- staged estimator that grows the sample count
  through a schedule ``T_1 < ... < T_K`` and rejects early as soon as the
  running estimate falls below the stage threshold ``P_k``. Low-confidence
  solutions are settled cheaply; only near-feasible ones earn the full budget.

The staged estimator preserves pairwise ranking with high probability: for two
solutions with true CLs separated by ``gap`` evaluated at ``n_a >= n_b``
samples, the probability of observing the wrong order is at most
``exp(-2 gap^2 / (1/n_b + 1/n_a))`` (see :func:`order_error_bound`), which is
itself at most ``exp(-n_b gap^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .instances import Instance, validate_solution_genes
from .sampling import InstanceSampler, as_genes, as_sampler


@dataclass(frozen=True)
class StageSchedule:
    """Cumulative sample sizes and early-rejection thresholds.

    ``thresholds[k]`` is the minimum running estimate required to proceed past
    stage ``k``; the final threshold must be unbounded (``math.inf``) so the
    last stage always returns.
    """

    cumulative_samples: tuple[int, ...]
    thresholds: tuple[float, ...]

    def __post_init__(self):
        samples = tuple(int(t) for t in self.cumulative_samples)
        thresholds = tuple(float(p) for p in self.thresholds)
        object.__setattr__(self, "cumulative_samples", samples)
        object.__setattr__(self, "thresholds", thresholds)
        if len(samples) != len(thresholds) or len(samples) == 0:
            raise ValueError("schedule needs matching, non-empty samples and thresholds")
        if any(t <= 0 for t in samples):
            raise ValueError("cumulative sample sizes must be positive")
        if any(b <= a for a, b in zip(samples, samples[1:])):
            raise ValueError("cumulative sample sizes must be strictly increasing")
        if any(b < a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be nondecreasing")
        if thresholds[-1] != math.inf:
            raise ValueError("final threshold must be unbounded (math.inf)")
        for p in thresholds[:-1]:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"non-final thresholds must lie in [0, 1], got {p}")

    @property
    def stages(self) -> int:
        return len(self.cumulative_samples)

    @property
    def max_samples(self) -> int:
        return self.cumulative_samples[-1]


DEFAULT_SCHEDULE = StageSchedule(
    cumulative_samples=(10_000, 100_000, 1_000_000),
    thresholds=(0.999, 0.9999, math.inf),
)


@dataclass(frozen=True)
class ClEstimate:
    """Outcome of one CL estimation."""

    p_hat: float
    samples_used: int
    stage_reached: int
    early_stopped: bool


def estimate_cl_fixed(
    instance_or_sampler: Instance | InstanceSampler,
    solution_or_genes,
    sample_count: int,
    rng: np.random.Generator,
) -> ClEstimate:
    """Estimate the CL from exactly ``sample_count`` fresh total-weight draws."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    sampler = as_sampler(instance_or_sampler)
    genes = validate_solution_genes(sampler.instance, as_genes(solution_or_genes))
    hits = sampler.count_hits(genes, sample_count, rng)
    return ClEstimate(
        p_hat=hits / sample_count,
        samples_used=int(sample_count),
        stage_reached=1,
        early_stopped=False,
    )


def estimate_cl_staged(
    instance_or_sampler: Instance | InstanceSampler,
    solution_or_genes,
    schedule: StageSchedule,
    rng: np.random.Generator,
) -> ClEstimate:
    """Estimate the CL through the staged schedule with early rejection.

    Stage ``k`` draws the additional samples needed to reach the cumulative
    count ``T_k`` and updates the running estimate over all samples so far;
    if the estimate falls below the stage threshold the solution is settled
    immediately with the samples spent to date.
    """
    sampler = as_sampler(instance_or_sampler)
    genes = validate_solution_genes(sampler.instance, as_genes(solution_or_genes))
    hits = 0
    previous = 0
    n_stages = schedule.stages
    for k, (cum, threshold) in enumerate(
        zip(schedule.cumulative_samples, schedule.thresholds), start=1
    ):
        hits += sampler.count_hits(genes, cum - previous, rng)
        previous = cum
        p_hat = hits / cum
        if p_hat < threshold:
            return ClEstimate(
                p_hat=p_hat,
                samples_used=cum,
                stage_reached=k,
                early_stopped=k < n_stages,
            )
    return ClEstimate(
        p_hat=hits / previous,
        samples_used=previous,
        stage_reached=n_stages,
        early_stopped=False,
    )


def order_error_bound(p_gap: float, n_a: int, n_b: int) -> float:
    """Bound on the probability of ranking two solutions in the wrong order.

    For true CLs separated by ``p_gap`` estimated with ``n_a`` and
    ``n_b <= n_a`` samples, the probability that the lower solution's
    estimate meets or exceeds the higher one's is at most
    ``exp(-2 p_gap^2 / (1/n_b + 1/n_a))``. A zero gap yields the vacuous
    bound 1.
    """
    if not 0.0 <= p_gap <= 1.0:
        raise ValueError(f"p_gap must lie in [0, 1], got {p_gap}")
    if n_a < 1 or n_b < 1:
        raise ValueError("sample counts must be positive")
    if n_b > n_a:
        raise ValueError(f"requires n_b <= n_a, got n_b={n_b} > n_a={n_a}")
    return math.exp(-2.0 * p_gap * p_gap / (1.0 / n_b + 1.0 / n_a))


def order_error_bound_simple(p_gap: float, n_b: int) -> float:
    """Simplified (weaker) form of :func:`order_error_bound`: exp(-n_b gap^2)."""
    if not 0.0 <= p_gap <= 1.0:
        raise ValueError(f"p_gap must lie in [0, 1], got {p_gap}")
    if n_b < 1:
        raise ValueError("sample count must be positive")
    return math.exp(-float(n_b) * p_gap * p_gap)


def min_sample_size(epsilon: float, bound: str = "hoeffding") -> int:
    """Samples needed to estimate a Bernoulli mean within ``epsilon``.

    ``hoeffding`` gives ``ceil(ln 2 / (2 eps^2))``; ``chernoff`` is exactly
    twice the pre-ceiling value.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    raw = math.log(2.0) / (2.0 * epsilon * epsilon)
    kind = bound.lower()
    if kind == "hoeffding":
        return math.ceil(raw)
    if kind == "chernoff":
        return math.ceil(2.0 * raw)
    raise ValueError(f"bound must be 'hoeffding' or 'chernoff', got {bound!r}")


def total_samples(estimates: Sequence[ClEstimate]) -> int:
    return sum(e.samples_used for e in estimates)
