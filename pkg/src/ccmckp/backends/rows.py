"""Numeric row layout shared by the sampling backends.

A weight distribution is compiled (see ``distributions.compile_row``) into a
flat float64 row of width ``ROW_WIDTH``. Column 0 holds the family code; the
remaining columns are family-specific:

uniform             1: low             2: high - low
truncated_normal    1: mu              2: sigma        3: cdf(low)
                    4: cdf(high) - cdf(low)            5: low    6: high
fatigue_life        1: shape           2: scale
bimodal             1: weight1
                    2: mu1   3: sigma1   4: cdf1(0)
                    5: mu2   6: sigma2   7: cdf2(0)
gamma               1: d = k' - 1/3    2: c = 1/sqrt(9d)   3: scale
                    4: 1/shape when shape < 1 (boosted draw), else 0
                    (k' = shape, or shape + 1 when boosted)
app_retransmission  1: window          2: attempts     3: 1 - success_prob
                    4: failure sentinel

Both backends must consume the underlying uniform stream identically: the
same number of ``next_double`` calls in the same order for a given row and
sample count. That contract is what keeps results backend-independent and is
asserted by the backend-parity tests (final bit-generator states must match).
"""

ROW_WIDTH = 8

FAMILY_UNIFORM = 0
FAMILY_TRUNCATED_NORMAL = 1
FAMILY_FATIGUE_LIFE = 2
FAMILY_BIMODAL = 3
FAMILY_GAMMA = 4
FAMILY_APP_RETRANSMISSION = 5

FAMILY_CODES = {
    "uniform": FAMILY_UNIFORM,
    "truncated_normal": FAMILY_TRUNCATED_NORMAL,
    "fatigue_life": FAMILY_FATIGUE_LIFE,
    "bimodal": FAMILY_BIMODAL,
    "gamma": FAMILY_GAMMA,
    "app_retransmission": FAMILY_APP_RETRANSMISSION,
}
