"""Weight spec validation and moment formulas.

The analytic moments are cross-checked against numeric quadrature of the
density (an independent derivation of the same quantities).
"""

import math

import numpy as np
import pytest
from scipy import integrate

from ccmckp.distributions import (
    WeightSpec,
    WeightSpecError,
    analytic_moments,
    compile_row,
    scale_spec,
)


def quad_moments(pdf, lo, hi):
    norm, _ = integrate.quad(pdf, lo, hi, limit=200)
    mean, _ = integrate.quad(lambda x: x * pdf(x), lo, hi, limit=200)
    second, _ = integrate.quad(lambda x: x * x * pdf(x), lo, hi, limit=200)
    mean /= norm
    second /= norm
    return mean, math.sqrt(second - mean * mean)


def norm_pdf(x, mu, s):
    return math.exp(-0.5 * ((x - mu) / s) ** 2) / (s * math.sqrt(2 * math.pi))


class TestMomentsAgainstQuadrature:
    def test_uniform(self):
        spec = WeightSpec("uniform", {"low": 1.2, "high": 4.0})
        mean, sd = analytic_moments(spec)
        assert mean == pytest.approx(2.6)
        assert sd == pytest.approx((4.0 - 1.2) / math.sqrt(12))

    def test_truncated_normal(self):
        spec = WeightSpec("truncated_normal", {"mu": 2.0, "sigma": 0.7, "low": 1.0, "high": 3.1})
        mean, sd = analytic_moments(spec)
        qmean, qsd = quad_moments(lambda x: norm_pdf(x, 2.0, 0.7), 1.0, 3.1)
        assert mean == pytest.approx(qmean, rel=1e-9)
        assert sd == pytest.approx(qsd, rel=1e-9)

    def test_fatigue_life(self):
        g, b = 0.4, 1.7

        def pdf(x):
            z = (math.sqrt(x / b) - math.sqrt(b / x)) / g
            dz = (1.0 / math.sqrt(x * b) + math.sqrt(b) / x**1.5) / (2 * g)
            return norm_pdf(z, 0.0, 1.0) * dz

        spec = WeightSpec("fatigue_life", {"shape": g, "scale": b})
        mean, sd = analytic_moments(spec)
        qmean, qsd = quad_moments(pdf, 1e-9, 60.0)
        assert mean == pytest.approx(qmean, rel=1e-7)
        assert sd == pytest.approx(qsd, rel=1e-5)

    def test_bimodal(self):
        w1, mu1, s1, mu2, s2 = 0.45, 1.0, 0.15, 2.4, 0.3
        z1, _ = integrate.quad(lambda x: norm_pdf(x, mu1, s1), 0, np.inf)
        z2, _ = integrate.quad(lambda x: norm_pdf(x, mu2, s2), 0, np.inf)

        def pdf(x):
            return w1 * norm_pdf(x, mu1, s1) / z1 + (1 - w1) * norm_pdf(x, mu2, s2) / z2

        spec = WeightSpec(
            "bimodal", {"weight1": w1, "mu1": mu1, "sigma1": s1, "mu2": mu2, "sigma2": s2}
        )
        mean, sd = analytic_moments(spec)
        qmean, qsd = quad_moments(pdf, 0.0, 10.0)
        assert mean == pytest.approx(qmean, rel=1e-8)
        assert sd == pytest.approx(qsd, rel=1e-6)

    def test_gamma(self):
        spec = WeightSpec("gamma", {"shape": 3.5, "scale": 0.8})
        mean, sd = analytic_moments(spec)
        assert mean == pytest.approx(3.5 * 0.8)
        assert sd == pytest.approx(math.sqrt(3.5) * 0.8)

    def test_app_retransmission(self):
        # Discrete-over-windows model: verify against direct summation.
        p, w, a, f = 0.9, 10.0, 4, 200.0
        spec = WeightSpec(
            "app_retransmission",
            {"success_prob": p, "window": w, "attempts": a, "failure_weight": f},
        )
        mean, sd = analytic_moments(spec)
        masses = [p * (1 - p) ** (k - 1) for k in range(1, a + 1)]
        fail = (1 - p) ** a
        ref_mean = sum(mass * ((k - 1) * w + w / 2) for k, mass in enumerate(masses, 1))
        ref_mean += fail * f
        ref_second = sum(
            mass * (((k - 1) * w) ** 2 + (k - 1) * w * w + w * w / 3)
            for k, mass in enumerate(masses, 1)
        )
        ref_second += fail * f * f
        assert mean == pytest.approx(ref_mean, rel=1e-12)
        assert sd == pytest.approx(math.sqrt(ref_second - ref_mean**2), rel=1e-12)


class TestValidation:
    def test_unknown_family(self):
        with pytest.raises(WeightSpecError, match="unknown weight family"):
            WeightSpec("lognormal", {"mu": 0.0, "sigma": 1.0})

    def test_missing_param(self):
        with pytest.raises(WeightSpecError, match="missing"):
            WeightSpec("uniform", {"low": 1.0})

    def test_bad_bounds(self):
        with pytest.raises(WeightSpecError):
            WeightSpec("uniform", {"low": 2.0, "high": 1.0})
        with pytest.raises(WeightSpecError):
            WeightSpec("uniform", {"low": -1.0, "high": 1.0})

    def test_degenerate_uniform_allowed(self):
        spec = WeightSpec("uniform", {"low": 2.0, "high": 2.0})
        assert analytic_moments(spec) == (2.0, 0.0)

    def test_truncation_mass_guard(self):
        with pytest.raises(WeightSpecError, match="mass"):
            WeightSpec(
                "truncated_normal", {"mu": 0.0, "sigma": 0.01, "low": 5.0, "high": 6.0}
            )

    def test_mixture_weight_bounds(self):
        with pytest.raises(WeightSpecError, match="weight1"):
            WeightSpec(
                "bimodal", {"weight1": 1.2, "mu1": 1, "sigma1": 0.1, "mu2": 2, "sigma2": 0.1}
            )

    def test_app_attempts_integer(self):
        with pytest.raises(WeightSpecError, match="attempts"):
            WeightSpec(
                "app_retransmission",
                {"success_prob": 0.9, "window": 10, "attempts": 2.5, "failure_weight": 50},
            )


def test_scale_spec_scales_moments_linearly():
    spec = WeightSpec("fatigue_life", {"shape": 0.3, "scale": 2.0})
    mean, sd = analytic_moments(spec)
    scaled = scale_spec(spec, 3.5)
    mean2, sd2 = analytic_moments(scaled)
    assert mean2 == pytest.approx(3.5 * mean, rel=1e-12)
    assert sd2 == pytest.approx(3.5 * sd, rel=1e-12)


def test_compile_row_family_codes():
    from ccmckp.backends import rows

    spec = WeightSpec("gamma", {"shape": 2.0, "scale": 1.0})
    assert compile_row(spec)[0] == rows.FAMILY_GAMMA
    assert rows.ROW_WIDTH == 8
