# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels.

Scalar twin of ``_numpy_backend``: identical algorithms, identical random
stream consumption, fused per-item loops. Draws doubles straight from the
generator's bit stream while holding its lock.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log, pow, sqrt
from numpy.random cimport bitgen_t

cnp.import_array()

BACKEND_NAME = "compiled"

# Family codes; must mirror backends.rows (asserted by FAMILY_CODES below).
cdef enum:
    FAM_UNIFORM = 0
    FAM_TRUNCATED_NORMAL = 1
    FAM_FATIGUE_LIFE = 2
    FAM_BIMODAL = 3
    FAM_GAMMA = 4
    FAM_APP_RETRANSMISSION = 5

FAMILY_CODES = {
    "uniform": FAM_UNIFORM,
    "truncated_normal": FAM_TRUNCATED_NORMAL,
    "fatigue_life": FAM_FATIGUE_LIFE,
    "bimodal": FAM_BIMODAL,
    "gamma": FAM_GAMMA,
    "app_retransmission": FAM_APP_RETRANSMISSION,
}

cdef double MIN_P = 5e-324

# Wichura's PPND16 coefficients (same tables as the numpy backend).
cdef double[8] NDTRI_A = [
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3]
cdef double[8] NDTRI_B = [
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3]
cdef double[8] NDTRI_C = [
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4]
cdef double[8] NDTRI_D = [
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9]
cdef double[8] NDTRI_E = [
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7]
cdef double[8] NDTRI_F = [
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15]


cdef inline double _horner(double r, double* coeffs) noexcept nogil:
    cdef double acc = coeffs[7]
    cdef int i
    for i in range(6, -1, -1):
        acc = acc * r + coeffs[i]
    return acc


cdef double _ndtri(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, x
    if q <= 0.425 and q >= -0.425:
        r = 0.180625 - q * q
        return q * _horner(r, NDTRI_A) / _horner(r, NDTRI_B)
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    if r < MIN_P:
        r = MIN_P
    r = sqrt(-log(r))
    if r <= 5.0:
        r = r - 1.6
        x = _horner(r, NDTRI_C) / _horner(r, NDTRI_D)
    else:
        r = r - 5.0
        x = _horner(r, NDTRI_E) / _horner(r, NDTRI_F)
    if q < 0.0:
        return -x
    return x


cdef inline double _next(bitgen_t* bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef void _fill_gamma(const double* row, double* out, Py_ssize_t n,
                      cnp.int64_t* pending, bitgen_t* bg) noexcept nogil:
    # Marsaglia-Tsang in global rounds over pending slots; each attempt
    # consumes (z, u) plus a boost double when shape < 1.
    cdef double d = row[1]
    cdef double c = row[2]
    cdef double scale = row[3]
    cdef double boost_exp = row[4]
    cdef bint boosted = boost_exp > 0.0
    cdef Py_ssize_t n_pending = n, kept, i
    cdef Py_ssize_t slot
    cdef double z, t, v, u, ub, z2, x
    cdef bint accept
    for i in range(n):
        pending[i] = i
    while n_pending > 0:
        kept = 0
        for i in range(n_pending):
            slot = pending[i]
            z = _ndtri(_next(bg))
            u = _next(bg)
            ub = _next(bg) if boosted else 0.0
            t = 1.0 + c * z
            v = t * t * t
            accept = False
            if v > 0.0:
                z2 = z * z
                if u < 1.0 - 0.0331 * z2 * z2:
                    accept = True
                elif log(u) < 0.5 * z2 + d * (1.0 - v + log(v)):
                    accept = True
            if accept:
                x = d * v * scale
                if boosted:
                    x = x * pow(ub, boost_exp)
                out[slot] = x
            else:
                pending[kept] = slot
                kept += 1
        n_pending = kept


cdef void _fill_item(const double* row, double* out, Py_ssize_t n,
                     cnp.int64_t* workspace, bitgen_t* bg, bint accumulate) noexcept nogil:
    cdef int family = <int> row[0]
    cdef Py_ssize_t i
    cdef double u, u2, p, x, z, t, s
    cdef double mu, sigma, cdf0
    cdef double window, fail_q, sentinel, cum, surv
    cdef int attempts, k
    cdef bint failed

    if family == FAM_GAMMA:
        # Callers always route gamma through accumulate=0 (rejection rounds
        # need a whole output vector of their own).
        _fill_gamma(row, out, n, workspace, bg)
        return

    for i in range(n):
        if family == FAM_UNIFORM:
            u = _next(bg)
            x = row[1] + row[2] * u
        elif family == FAM_TRUNCATED_NORMAL:
            u = _next(bg)
            p = row[3] + u * row[4]
            x = row[1] + row[2] * _ndtri(p)
            if x < row[5]:
                x = row[5]
            elif x > row[6]:
                x = row[6]
        elif family == FAM_FATIGUE_LIFE:
            u = _next(bg)
            z = _ndtri(u)
            t = (0.5 * row[1]) * z
            s = t + sqrt(t * t + 1.0)
            x = row[2] * (s * s)
        elif family == FAM_BIMODAL:
            u = _next(bg)
            u2 = _next(bg)
            if u < row[1]:
                mu = row[2]
                sigma = row[3]
                cdf0 = row[4]
            else:
                mu = row[5]
                sigma = row[6]
                cdf0 = row[7]
            p = cdf0 + u2 * (1.0 - cdf0)
            x = mu + sigma * _ndtri(p)
            if x < 0.0:
                x = 0.0
        else:  # FAM_APP_RETRANSMISSION
            window = row[1]
            attempts = <int> row[2]
            fail_q = row[3]
            sentinel = row[4]
            u = _next(bg)
            u2 = _next(bg)
            surv = 1.0
            failed = True
            k = 0
            while k < attempts:
                surv *= fail_q
                cum = 1.0 - surv
                if u < cum:
                    failed = False
                    break
                k += 1
            if failed:
                x = sentinel
            else:
                x = k * window + window * (1.0 - u2)
        if accumulate:
            out[i] += x
        else:
            out[i] = x


cdef bitgen_t* _acquire(object gen):
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy Generator with a BitGenerator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


def fill_weights(row, Py_ssize_t n, object gen):
    """Draw ``n`` i.i.d. weights for one compiled spec row."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] row_arr = np.ascontiguousarray(row, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] workspace = np.empty(n if <int> row_arr[0] == FAM_GAMMA else 1, dtype=np.int64)
    cdef bitgen_t* bg = _acquire(gen)
    with gen.bit_generator.lock, nogil:
        _fill_item(&row_arr[0], &out[0], n, &workspace[0], bg, 0)
    return out


def fill_totals(table, Py_ssize_t n, object gen, out=None):
    """Draw ``n`` i.i.d. totals over the item rows of ``table`` (item-major)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tab = np.ascontiguousarray(table, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] totals
    if out is None:
        totals = np.zeros(n, dtype=np.float64)
    else:
        totals = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] workspace = np.empty(max(n, 1), dtype=np.int64)
    cdef bitgen_t* bg = _acquire(gen)
    cdef Py_ssize_t n_items = tab.shape[0]
    cdef Py_ssize_t item, i
    cdef int family
    with gen.bit_generator.lock, nogil:
        for item in range(n_items):
            family = <int> tab[item, 0]
            if family == FAM_GAMMA:
                # Rejection rounds need a full scratch vector.
                _fill_item(&tab[item, 0], &scratch[0], n, &workspace[0], bg, 0)
                for i in range(n):
                    totals[i] += scratch[i]
            else:
                _fill_item(&tab[item, 0], &totals[0], n, &workspace[0], bg, 1)
    return totals
