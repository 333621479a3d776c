"""
Exact enumeration constants for triangulations of polygons, and the peeling
transition probabilities built from them.

All exact values are ``fractions.Fraction``. Float helpers (``log_*``) exist
for sizes where exact rationals would be wasteful, and are documented as such.
"""

import math
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

# Exponential growth rate of the number of triangulations of a polygon.
ALPHA = Fraction(27, 2)

# Indices cached by the default table. Larger k fall back to the closed
# factorial forms (and log_* helpers in float), so exact values exist for any
# index and only the cache stops at this size.
DEFAULT_MAX_INDEX = 2048

LOG_9 = math.log(9.0)


def check_index(name, value, lower):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < lower:
        raise ValueError(f"{name} must be >= {lower}, got {value}")
    return int(value)


def partition_function_closed(m):
    """
    Evaluate Z_m = 4(2m-4)! / (9 m! (m-2)!) * (9/4)^m from factorials.
    """
    m = check_index("m", m, 2)
    num = 4 * math.factorial(2 * m - 4) * 9 ** m
    den = 9 * math.factorial(m) * math.factorial(m - 2) * 4 ** m
    return Fraction(num, den)


def halfplane_pk_closed(k):
    """
    Evaluate p_k = (2k-2)! / (4^k (k-1)! (k+1)!) without the Z_m detour.
    """
    k = check_index("k", k, 1)
    return Fraction(math.comb(2 * k - 2, k - 1), 4 ** k * k * (k + 1))


class EnumerationTable:
    """
    Immutable caches of Z_m and p_k built from their ratio recurrences.

    :param max_index: largest cached index; Z_m is cached for m <= max_index + 1
                      so that p_k = 9^{-k} Z_{k+1} is covered for k <= max_index.
    """

    def __init__(self, max_index=DEFAULT_MAX_INDEX):
        max_index = check_index("max_index", max_index, 2)
        self.max_index = max_index

        z = [None, None, Fraction(9, 8)]
        for m in range(2, max_index + 1):
            z.append(z[m] * Fraction(9 * (2 * m - 3), 2 * (m + 1)))
        p = [None, Fraction(1, 8)]
        for k in range(1, max_index):
            p.append(p[k] * Fraction(2 * k - 1, 2 * (k + 2)))
        self._z = tuple(z)
        self._p = tuple(p)

    def z(self, m):
        m = check_index("m", m, 2)
        if m < len(self._z):
            return self._z[m]
        return partition_function_closed(m)

    def p(self, k):
        k = check_index("k", k, 1)
        if k < len(self._p):
            return self._p[k]
        return halfplane_pk_closed(k)

    def tail(self, K):
        K = check_index("K", K, 0)
        if K == 0:
            return Fraction(1, 6)
        return (2 * K - 1) * self.p(K) / 3

    def mean_tail(self, K):
        K = check_index("K", K, 0)
        if K == 0:
            return Fraction(1, 3)
        return (2 * K - 1) * (3 * K + 2) * self.p(K) / 3

    def __repr__(self):
        return f"EnumerationTable(max_index={self.max_index})"


_DEFAULT_TABLE = None


def default_table():
    """
    Return the process-wide table, building it on first use.
    """
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = EnumerationTable()
    return _DEFAULT_TABLE


def partition_function(m, table=None):
    """
    Exact partition function Z_m of triangulations of an m-gon at the
    critical weight 1/ALPHA per inner vertex.

    :param m: boundary length, at least 2.
    :param table: optional EnumerationTable; the default table otherwise.
    :return: a Fraction.
    """
    return (table or default_table()).z(m)


def halfplane_pk(k, table=None):
    """
    Probability that a half-plane peeling step swallows k boundary vertices
    on a given side: p_k = 9^{-k} Z_{k+1}.
    """
    return (table or default_table()).p(k)


def tail_mass(K, table=None):
    """
    Exact sum of p_k over k > K, from the closed form (2K-1) p_K / 3.
    """
    return (table or default_table()).tail(K)


def mean_tail(K, table=None):
    """
    Exact sum of k * p_k over k > K. At K = 0 this is 1/3, which balances the
    +1 step of probability 1/3 and makes the boundary walk centered.
    """
    return (table or default_table()).mean_tail(K)


def peel_internal_free(m):
    """
    Probability that peeling a free m-gon reveals an inner vertex:
    Z_{m+1} / (ALPHA Z_m) = (2m-3) / (3m+3).
    """
    m = check_index("m", m, 2)
    return Fraction(2 * m - 3, 3 * m + 3)


def peel_internal_uipt(m):
    """
    Probability that peeling the UIPT of an m-gon reveals an inner vertex:
    C_{m+1} / (ALPHA C_m) = (2m-1) / (3m-3).
    """
    m = check_index("m", m, 3)
    return Fraction(2 * m - 1, 3 * m - 3)


def peel_split_free(m, k, table=None):
    """
    Probability that peeling a free m-gon connects the peeled edge to the
    boundary vertex at distance k, measured to one side.

    Distance k to one side is distance m-1-k to the other, so summing this
    over k = 1..m-2 already accounts for both directions:
    peel_internal_free(m) + sum_k peel_split_free(m, k) = 1.

    :param m: boundary length, at least 2.
    :param k: distance, 1 <= k <= m-2.
    """
    m = check_index("m", m, 2)
    k = check_index("k", k, 1)
    if k > m - 2:
        raise ValueError(f"k must be in [1, {m - 2}] for m={m}, got {k}")
    table = table or default_table()
    return table.z(k + 1) * table.z(m - k) / table.z(m)


def uipt_ratio(m_num, m_den):
    """
    Exact ratio C_{m_num} / C_{m_den}. The constants C_m carry sqrt(pi) and
    3^{7/2}, which cancel in every ratio; C_{m+1}/C_m = 9(2m-1) / (2(m-1)).
    """
    m_num = check_index("m_num", m_num, 2)
    m_den = check_index("m_den", m_den, 2)
    lo, hi = sorted((m_num, m_den))
    ratio = Fraction(1)
    for m in range(lo, hi):
        ratio *= Fraction(9 * (2 * m - 1), 2 * (m - 1))
    return ratio if m_num >= m_den else 1 / ratio


def peel_split_uipt(m, k, table=None):
    """
    Probability that peeling the UIPT of an m-gon swallows k vertices on a
    given side into a free polygon: Z_{k+1} C_{m-k} / C_m. Here both sides
    are counted separately, so
    peel_internal_uipt(m) + 2 * sum_k peel_split_uipt(m, k) = 1.
    """
    m = check_index("m", m, 3)
    k = check_index("k", k, 1)
    if k > m - 2:
        raise ValueError(f"k must be in [1, {m - 2}] for m={m}, got {k}")
    table = table or default_table()
    return table.z(k + 1) * uipt_ratio(m - k, m)


def uipt_partition_function_float(m):
    """
    Approximate C_m = 4(2m-3)! / (3^{7/2} sqrt(pi) (m-2)!^2) (9/4)^m.
    Diagnostics only: the exact algorithms use uipt_ratio.
    """
    m = check_index("m", m, 2)
    log_c = (
        math.log(4.0)
        + gammaln(2 * m - 2)
        - 3.5 * math.log(3.0)
        - 0.5 * math.log(math.pi)
        - 2.0 * gammaln(m - 1)
        + m * math.log(9.0 / 4.0)
    )
    return float(np.exp(log_c))


def log_partition_function(m):
    """
    float64 log Z_m for scalar or array m >= 2, via log-gamma.
    """
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 2):
        raise ValueError(f"m must be >= 2, got min {m.min()}")
    return (
        math.log(4.0)
        + gammaln(2.0 * m - 3.0)
        - LOG_9
        - gammaln(m + 1.0)
        - gammaln(m - 1.0)
        + m * math.log(9.0 / 4.0)
    )


def log_halfplane_pk(k):
    """
    float64 log p_k for scalar or array k >= 1, via log-gamma.
    """
    k = np.asarray(k, dtype=np.float64)
    if np.any(k < 1):
        raise ValueError(f"k must be >= 1, got min {k.min()}")
    return gammaln(2.0 * k - 1.0) - k * math.log(4.0) - gammaln(k) - gammaln(k + 2.0)


def log_tail_mass(K):
    """
    float64 log of the tail sum over k > K, for K >= 1.
    """
    K = np.asarray(K, dtype=np.float64)
    if np.any(K < 1):
        raise ValueError(f"K must be >= 1, got min {K.min()}")
    return np.log((2.0 * K - 1.0) / 3.0) + log_halfplane_pk(K)


def gamma_prime():
    """
    Constant in Z_n ~ gamma' 9^n n^{-5/2}; from Stirling, gamma' = 1/(36 sqrt(pi)).
    """
    return 1.0 / (36.0 * math.sqrt(math.pi))


def pk_generating_function(w):
    """
    sum_k p_k w^k = 1/2 + ((1-w)^{3/2} - 1) / (3w), for 0 < |w| <= 1 real.
    """
    w = float(w)
    if w == 0.0:
        return 0.0
    if not -1.0 <= w <= 1.0:
        raise ValueError(f"w must be in [-1, 1], got {w}")
    return 0.5 + ((1.0 - w) ** 1.5 - 1.0) / (3.0 * w)


def format_rational(value):
    """
    Render a Fraction as "num/den" (integers keep the /1).
    """
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def pk_table(max_k, table=None):
    """
    Rows (k, p_k, tail_mass(k)) for k = 1..max_k.
    """
    max_k = check_index("max_k", max_k, 1)
    table = table or default_table()
    return [(k, table.p(k), table.tail(k)) for k in range(1, max_k + 1)]


def partition_table(max_m, table=None):
    """
    Rows (m, Z_m, peel_internal_free(m)) for m = 2..max_m.
    """
    max_m = check_index("max_m", max_m, 2)
    table = table or default_table()
    return [(m, table.z(m), peel_internal_free(m)) for m in range(2, max_m + 1)]
