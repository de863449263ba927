"""Vectorized numpy implementation of the sampling kernels.

This is the fallback backend selected when the compiled extension is not
available. It consumes the random stream with exactly the same pattern as the
compiled kernel (same ``next_double`` count and order per draw), so both
backends stay interchangeable mid-run.
"""

from __future__ import annotations

import numpy as np

from . import rows

BACKEND_NAME = "numpy"

# Wichura's PPND16 rational approximations (inverse normal CDF), evaluated
# as Horner polynomials in both backends with identical coefficient order.
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)

_MIN_P = 5e-324  # keeps log() finite when a raw uniform is exactly 0


def _horner(r, coeffs):
    acc = np.full_like(r, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * r + c
    return acc


def ndtri(p):
    """Inverse standard normal CDF (PPND16), vectorized."""
    p = np.asarray(p, dtype=np.float64)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    out = np.empty_like(p)
    q = p - 0.5
    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _horner(r, _A) / _horner(r, _B)
    tails = ~central
    if tails.any():
        qt = q[tails]
        pt = np.where(qt < 0.0, p[tails], 1.0 - p[tails])
        pt = np.maximum(pt, _MIN_P)
        r = np.sqrt(-np.log(pt))
        x = np.empty_like(r)
        near = r <= 5.0
        if near.any():
            rn = r[near] - 1.6
            x[near] = _horner(rn, _C) / _horner(rn, _D)
        far = ~near
        if far.any():
            rf = r[far] - 5.0
            x[far] = _horner(rf, _E) / _horner(rf, _F)
        out[tails] = np.where(qt < 0.0, -x, x)
    return out[0] if scalar else out


def _fill_uniform(row, n, gen):
    u = gen.random(n)
    return row[1] + row[2] * u


def _fill_truncated_normal(row, n, gen):
    u = gen.random(n)
    p = row[3] + u * row[4]
    x = row[1] + row[2] * ndtri(p)
    # Clamp instead of rejecting: the quantile approximation can overshoot the
    # window by its own error (~1e-9 relative) at most.
    return np.clip(x, row[5], row[6])


def _fill_fatigue_life(row, n, gen):
    u = gen.random(n)
    z = ndtri(u)
    halfg = 0.5 * row[1]
    t = halfg * z
    s = t + np.sqrt(t * t + 1.0)
    return row[2] * (s * s)


def _fill_bimodal(row, n, gen):
    u = gen.random((n, 2))
    first = u[:, 0] < row[1]
    mu = np.where(first, row[2], row[5])
    sigma = np.where(first, row[3], row[6])
    cdf0 = np.where(first, row[4], row[7])
    p = cdf0 + u[:, 1] * (1.0 - cdf0)
    x = mu + sigma * ndtri(p)
    return np.maximum(x, 0.0)


def _fill_gamma(row, n, gen):
    # Marsaglia-Tsang squeeze, resolved in rounds over the still-pending slots
    # so the stream consumption matches the compiled kernel: every attempt
    # consumes (z, u) -- plus one boost double when shape < 1 -- whether or
    # not it is accepted.
    d = row[1]
    c = row[2]
    scale = row[3]
    boost_exp = row[4]
    cols = 3 if boost_exp > 0.0 else 2
    out = np.empty(n, dtype=np.float64)
    pending = np.arange(n)
    while pending.size:
        u = gen.random((pending.size, cols))
        z = ndtri(u[:, 0])
        t = 1.0 + c * z
        v = t * t * t
        accept = np.zeros(pending.size, dtype=bool)
        ok = v > 0.0
        if ok.any():
            zz = z[ok]
            vv = v[ok]
            uu = u[ok, 1]
            z2 = zz * zz
            squeeze = uu < 1.0 - 0.0331 * z2 * z2
            decided = squeeze.copy()
            rest = ~squeeze
            if rest.any():
                decided[rest] = np.log(uu[rest]) < 0.5 * z2[rest] + d * (
                    1.0 - vv[rest] + np.log(vv[rest])
                )
            accept[ok] = decided
        if accept.any():
            x = d * v[accept] * scale
            if boost_exp > 0.0:
                x = x * np.power(u[accept, 2], boost_exp)
            out[pending[accept]] = x
        pending = pending[~accept]
    return out


def _fill_app(row, n, gen):
    window = row[1]
    attempts = int(row[2])
    fail_q = row[3]
    sentinel = row[4]
    # Cumulative success thresholds 1 - q^k, built by the same repeated
    # multiplication the compiled kernel performs.
    thresholds = []
    s = 1.0
    for _ in range(attempts):
        s *= fail_q
        thresholds.append(1.0 - s)
    u = gen.random((n, 2))
    u1 = u[:, 0]
    k = np.zeros(n, dtype=np.int64)
    for c_k in thresholds:
        k += u1 >= c_k
    delay = k * window + window * (1.0 - u[:, 1])
    return np.where(k >= attempts, sentinel, delay)


_FILLERS = {
    rows.FAMILY_UNIFORM: _fill_uniform,
    rows.FAMILY_TRUNCATED_NORMAL: _fill_truncated_normal,
    rows.FAMILY_FATIGUE_LIFE: _fill_fatigue_life,
    rows.FAMILY_BIMODAL: _fill_bimodal,
    rows.FAMILY_GAMMA: _fill_gamma,
    rows.FAMILY_APP_RETRANSMISSION: _fill_app,
}


def fill_weights(row, n, gen):
    """Draw ``n`` i.i.d. weights for one compiled spec row."""
    row = np.asarray(row, dtype=np.float64)
    return _FILLERS[int(row[0])](row, int(n), gen)


def fill_totals(table, n, gen, out=None):
    """Draw ``n`` i.i.d. totals for a selection of items (one row each).

    Item-major accumulation: item 0's ``n`` draws are consumed first, then
    item 1's, and so on. Adds into ``out`` when provided.
    """
    table = np.asarray(table, dtype=np.float64)
    totals = np.zeros(int(n), dtype=np.float64) if out is None else out
    for row in table:
        totals += _FILLERS[int(row[0])](row, int(n), gen)
    return totals
