"""
Monte Carlo estimates with standard errors, and the statistical agreement
checks used by the verifiers and the tests.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class EstimateWithCI:
    """
    Frequency estimate of an event probability.

    :param value: event frequency among determined samples.
    :param stderr: binomial standard error.
    :param samples: number of determined samples.
    :param seed: master seed the samples came from (None if unknown).
    :param undetermined: samples dropped because their budget ran out.
    """

    value: float
    stderr: float
    samples: int
    seed: int = None
    undetermined: int = 0

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class WeightedEstimate:
    """
    Mean of an importance weight times an event indicator.
    """

    value: float
    stderr: float
    samples: int
    weight_max: float
    seed: int = None
    undetermined: int = 0

    def to_dict(self):
        return asdict(self)


def binomial_estimate(successes, samples, seed=None, undetermined=0):
    """
    Build an EstimateWithCI from an event count.

    The standard error uses p(1-p)/n with p clipped away from 0 and 1 by
    half a count, so an all-or-nothing sample still carries an error.
    """
    if samples <= 0:
        return EstimateWithCI(math.nan, math.nan, 0, seed, undetermined)
    p = successes / samples
    p_err = min(max(p, 0.5 / samples), 1.0 - 0.5 / samples)
    stderr = math.sqrt(p_err * (1.0 - p_err) / samples)
    return EstimateWithCI(float(p), stderr, int(samples), seed, int(undetermined))


def weighted_estimate(weight_sum, weight_sq_sum, samples, weight_max,
                      seed=None, undetermined=0):
    """
    Build a WeightedEstimate from sums of weights and squared weights.
    """
    if samples <= 0:
        return WeightedEstimate(math.nan, math.nan, 0, 0.0, seed, undetermined)
    mean = weight_sum / samples
    var = max(weight_sq_sum / samples - mean * mean, 0.0)
    stderr = math.sqrt(var / max(samples - 1, 1))
    return WeightedEstimate(
        float(mean), stderr, int(samples), float(weight_max), seed, int(undetermined)
    )


def combined_sigma(*stderrs):
    return math.sqrt(sum(s * s for s in stderrs))


def within_sigma(x, y, sigma, k=3.0):
    """
    Whether |x - y| <= k * sigma.
    """
    return abs(x - y) <= k * sigma


def z_score(x, y, sigma):
    if sigma <= 0:
        return math.inf if x != y else 0.0
    return abs(x - y) / sigma


def chi_square_agreement(observed, expected_probs, alpha=0.01):
    """
    Chi-square goodness of fit of counts against probabilities; the last
    cell of ``expected_probs`` may be a lumped remainder.

    :return: (statistic, p_value, passed).
    """
    observed = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(expected_probs, dtype=np.float64)
    expected = probs / probs.sum() * observed.sum()
    statistic, p_value = stats.chisquare(observed, expected)
    return float(statistic), float(p_value), bool(p_value > alpha)


def two_sample_chi_square(counts_a, counts_b, alpha=0.01):
    """
    Chi-square test that two histograms come from the same law.
    """
    table = np.vstack([counts_a, counts_b]).astype(np.float64)
    table = table[:, table.sum(axis=0) > 0]
    statistic, p_value, _, _ = stats.chi2_contingency(table)
    return float(statistic), float(p_value), bool(p_value > alpha)


def ks_agreement(sample_a, sample_b, alpha=0.01):
    """
    Two-sample Kolmogorov-Smirnov test.

    :return: (statistic, p_value, passed).
    """
    result = stats.ks_2samp(sample_a, sample_b)
    return float(result.statistic), float(result.pvalue), bool(result.pvalue > alpha)


def median_of_means(values, groups=10):
    """
    Median of group means; robust location estimate for heavy tails.
    """
    values = np.asarray(values, dtype=np.float64)
    groups = max(1, min(groups, values.size))
    return float(np.median([chunk.mean() for chunk in np.array_split(values, groups)]))


def nonincreasing_within(values, sigmas, k=3.0):
    """
    Whether a sequence is non-increasing up to k-sigma noise between
    consecutive entries.
    """
    for (x, sx), (y, sy) in zip(zip(values, sigmas), zip(values[1:], sigmas[1:])):
        if y - x > k * combined_sigma(sx, sy):
            return False
    return True
