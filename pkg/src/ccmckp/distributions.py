"""Weight distribution specifications.

Item weights are random variables known only through sampling. Each item
carries a :class:`WeightSpec` naming one of the supported families plus its
parameters. This module owns spec validation, exact first/second moments
(used by instance generators and test oracles), and compilation of a spec
into the flat numeric row consumed by the sampling backends.

Families
--------
uniform             low, high                     U(low, high)
truncated_normal    mu, sigma, low, high          N(mu, sigma^2) restricted to [low, high]
fatigue_life        shape, scale                  Birnbaum-Saunders(shape, scale)
bimodal             weight1, mu1, sigma1,         two-component normal mixture,
                    mu2, sigma2                   each component truncated to [0, inf)
gamma               shape, scale                  Gamma(shape, scale)
app_retransmission  success_prob, window,         windowed retransmission delay: each of
                    attempts, failure_weight      `attempts` tries succeeds w.p. success_prob;
                                                  success in try k costs (k-1)*window plus a
                                                  uniform draw on (0, window]; exhausting all
                                                  tries yields the finite failure_weight
                                                  sentinel (must exceed any capacity in use).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .backends import rows

FAMILIES = (
    "uniform",
    "truncated_normal",
    "fatigue_life",
    "bimodal",
    "gamma",
    "app_retransmission",
)

PARAM_FIELDS: dict[str, tuple[str, ...]] = {
    "uniform": ("low", "high"),
    "truncated_normal": ("mu", "sigma", "low", "high"),
    "fatigue_life": ("shape", "scale"),
    "bimodal": ("weight1", "mu1", "sigma1", "mu2", "sigma2"),
    "gamma": ("shape", "scale"),
    "app_retransmission": ("success_prob", "window", "attempts", "failure_weight"),
}

# Truncation windows carrying less mass than this are rejected at validation
# time; the inverse-CDF sampler would lose all precision inside them.
MIN_TRUNCATION_MASS = 1e-12

_SQRT2 = math.sqrt(2.0)


class WeightSpecError(ValueError):
    """Raised when a weight specification fails validation."""


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class WeightSpec:
    """An implicit weight distribution: family name plus parameters."""

    family: str
    params: Mapping[str, float]

    def __post_init__(self):
        validate_weight_spec(self)

    def param(self, name: str) -> float:
        return float(self.params[name])


def validate_weight_spec(spec: WeightSpec) -> None:
    if spec.family not in FAMILIES:
        raise WeightSpecError(f"unknown weight family {spec.family!r}")
    expected = PARAM_FIELDS[spec.family]
    got = set(spec.params)
    if got != set(expected):
        missing = sorted(set(expected) - got)
        extra = sorted(got - set(expected))
        raise WeightSpecError(
            f"{spec.family}: bad parameter set (missing {missing}, unexpected {extra})"
        )
    p = {k: float(v) for k, v in spec.params.items()}
    for name, value in p.items():
        if not math.isfinite(value):
            raise WeightSpecError(f"{spec.family}: parameter {name} must be finite")

    f = spec.family
    if f == "uniform":
        if p["low"] < 0 or p["high"] < p["low"]:
            raise WeightSpecError("uniform: requires 0 <= low <= high")
    elif f == "truncated_normal":
        if p["sigma"] <= 0:
            raise WeightSpecError("truncated_normal: sigma must be > 0")
        if p["low"] < 0 or p["high"] <= p["low"]:
            raise WeightSpecError("truncated_normal: requires 0 <= low < high")
        mass = _norm_cdf((p["high"] - p["mu"]) / p["sigma"]) - _norm_cdf(
            (p["low"] - p["mu"]) / p["sigma"]
        )
        if mass < MIN_TRUNCATION_MASS:
            raise WeightSpecError(
                f"truncated_normal: truncation window carries mass {mass:.3e} "
                f"(< {MIN_TRUNCATION_MASS:g}); sampler would be degenerate"
            )
    elif f in ("fatigue_life", "gamma"):
        if p["shape"] <= 0 or p["scale"] <= 0:
            raise WeightSpecError(f"{f}: shape and scale must be > 0")
    elif f == "bimodal":
        if not 0.0 < p["weight1"] < 1.0:
            raise WeightSpecError("bimodal: weight1 must lie in (0, 1)")
        for c in ("1", "2"):
            if p[f"sigma{c}"] <= 0:
                raise WeightSpecError(f"bimodal: sigma{c} must be > 0")
            if p[f"mu{c}"] <= 0:
                raise WeightSpecError(f"bimodal: mu{c} must be > 0")
    elif f == "app_retransmission":
        if not 0.0 < p["success_prob"] < 1.0:
            raise WeightSpecError("app_retransmission: success_prob must lie in (0, 1)")
        if p["window"] <= 0:
            raise WeightSpecError("app_retransmission: window must be > 0")
        attempts = p["attempts"]
        if attempts != int(attempts) or not 1 <= attempts <= 8:
            raise WeightSpecError("app_retransmission: attempts must be an integer in [1, 8]")
        if p["failure_weight"] <= 0:
            raise WeightSpecError("app_retransmission: failure_weight must be > 0")


def compile_row(spec: WeightSpec) -> np.ndarray:
    """Pack a spec into the fixed-width numeric row read by the sampling backends."""
    row = np.zeros(rows.ROW_WIDTH, dtype=np.float64)
    f = spec.family
    if f == "uniform":
        low, high = spec.param("low"), spec.param("high")
        row[0] = rows.FAMILY_UNIFORM
        row[1] = low
        row[2] = high - low
    elif f == "truncated_normal":
        mu, sigma = spec.param("mu"), spec.param("sigma")
        low, high = spec.param("low"), spec.param("high")
        cdf_lo = _norm_cdf((low - mu) / sigma)
        cdf_hi = _norm_cdf((high - mu) / sigma)
        row[0] = rows.FAMILY_TRUNCATED_NORMAL
        row[1] = mu
        row[2] = sigma
        row[3] = cdf_lo
        row[4] = cdf_hi - cdf_lo
        row[5] = low
        row[6] = high
    elif f == "fatigue_life":
        row[0] = rows.FAMILY_FATIGUE_LIFE
        row[1] = spec.param("shape")
        row[2] = spec.param("scale")
    elif f == "bimodal":
        row[0] = rows.FAMILY_BIMODAL
        row[1] = spec.param("weight1")
        for slot, c in ((2, "1"), (5, "2")):
            mu = spec.param(f"mu{c}")
            sigma = spec.param(f"sigma{c}")
            row[slot] = mu
            row[slot + 1] = sigma
            row[slot + 2] = _norm_cdf(-mu / sigma)
    elif f == "gamma":
        shape, scale = spec.param("shape"), spec.param("scale")
        boosted = shape < 1.0
        d = (shape + 1.0 if boosted else shape) - 1.0 / 3.0
        row[0] = rows.FAMILY_GAMMA
        row[1] = d
        row[2] = 1.0 / math.sqrt(9.0 * d)
        row[3] = scale
        row[4] = (1.0 / shape) if boosted else 0.0
    elif f == "app_retransmission":
        row[0] = rows.FAMILY_APP_RETRANSMISSION
        row[1] = spec.param("window")
        row[2] = spec.param("attempts")
        row[3] = 1.0 - spec.param("success_prob")
        row[4] = spec.param("failure_weight")
    else:  # pragma: no cover - guarded by validation
        raise WeightSpecError(f"unknown weight family {f!r}")
    return row


def _truncnorm_moments(mu, sigma, low, high):
    a = (low - mu) / sigma
    b = (high - mu) / sigma
    z = _norm_cdf(b) - _norm_cdf(a)
    pa, pb = _norm_pdf(a), _norm_pdf(b)
    mean = mu + sigma * (pa - pb) / z
    var = sigma * sigma * (1.0 + (a * pa - b * pb) / z - ((pa - pb) / z) ** 2)
    return mean, max(var, 0.0)


def _lower_truncnorm_moments(mu, sigma):
    # Truncated to [0, inf).
    a = -mu / sigma
    z = 1.0 - _norm_cdf(a)
    pa = _norm_pdf(a)
    mean = mu + sigma * pa / z
    var = sigma * sigma * (1.0 + a * pa / z - (pa / z) ** 2)
    return mean, max(var, 0.0)


def analytic_moments(spec: WeightSpec) -> tuple[float, float]:
    """Exact (mean, standard deviation) of the distribution a spec describes."""
    f = spec.family
    if f == "uniform":
        low, high = spec.param("low"), spec.param("high")
        return (low + high) / 2.0, (high - low) / math.sqrt(12.0)
    if f == "truncated_normal":
        mean, var = _truncnorm_moments(
            spec.param("mu"), spec.param("sigma"), spec.param("low"), spec.param("high")
        )
        return mean, math.sqrt(var)
    if f == "fatigue_life":
        g, b = spec.param("shape"), spec.param("scale")
        mean = b * (1.0 + 0.5 * g * g)
        var = (b * g) ** 2 * (1.0 + 1.25 * g * g)
        return mean, math.sqrt(var)
    if f == "bimodal":
        w1 = spec.param("weight1")
        m1, v1 = _lower_truncnorm_moments(spec.param("mu1"), spec.param("sigma1"))
        m2, v2 = _lower_truncnorm_moments(spec.param("mu2"), spec.param("sigma2"))
        mean = w1 * m1 + (1.0 - w1) * m2
        second = w1 * (v1 + m1 * m1) + (1.0 - w1) * (v2 + m2 * m2)
        return mean, math.sqrt(max(second - mean * mean, 0.0))
    if f == "gamma":
        k, theta = spec.param("shape"), spec.param("scale")
        return k * theta, math.sqrt(k) * theta
    if f == "app_retransmission":
        p = spec.param("success_prob")
        w = spec.param("window")
        attempts = int(spec.param("attempts"))
        sentinel = spec.param("failure_weight")
        mean = 0.0
        second = 0.0
        fail = 1.0
        for k in range(1, attempts + 1):
            mass = p * fail
            fail *= 1.0 - p
            base = (k - 1) * w
            # success delay in try k: base + U(0, w]
            mean += mass * (base + 0.5 * w)
            second += mass * (base * base + base * w + w * w / 3.0)
        mean += fail * sentinel
        second += fail * sentinel * sentinel
        return mean, math.sqrt(max(second - mean * mean, 0.0))
    raise WeightSpecError(f"unknown weight family {f!r}")


def scale_spec(spec: WeightSpec, factor: float) -> WeightSpec:
    """Multiply all location/scale parameters by ``factor`` (> 0).

    Every family is a scale family in these parameters, so the resulting
    mean and standard deviation scale by exactly ``factor``. Shape-type
    parameters (gamma/fatigue shape, mixture weight, success probability,
    attempt count) are untouched; the retransmission sentinel is also
    untouched since it is a capacity-relative constant, not a delay scale.
    """
    if factor <= 0:
        raise ValueError("scale factor must be > 0")
    p = dict(spec.params)
    f = spec.family
    if f == "uniform":
        p["low"] *= factor
        p["high"] *= factor
    elif f == "truncated_normal":
        for k in ("mu", "sigma", "low", "high"):
            p[k] *= factor
    elif f == "fatigue_life":
        p["scale"] *= factor
    elif f == "bimodal":
        for k in ("mu1", "sigma1", "mu2", "sigma2"):
            p[k] *= factor
    elif f == "gamma":
        p["scale"] *= factor
    elif f == "app_retransmission":
        p["window"] *= factor
    return WeightSpec(family=f, params=p)
