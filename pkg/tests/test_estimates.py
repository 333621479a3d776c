import math

import numpy as np
import pytest

from uipt_percolation import estimates


def test_binomial_estimate():
    est = estimates.binomial_estimate(50, 100, seed=4, undetermined=2)
    assert est.value == 0.5
    assert est.stderr == pytest.approx(0.05)
    assert est.to_dict() == {
        "value": 0.5, "stderr": est.stderr, "samples": 100, "seed": 4, "undetermined": 2,
    }


def test_binomial_estimate_edges():
    empty = estimates.binomial_estimate(0, 0)
    assert math.isnan(empty.value)
    assert empty.samples == 0
    all_hits = estimates.binomial_estimate(10, 10)
    assert all_hits.value == 1.0
    assert all_hits.stderr > 0


def test_weighted_estimate():
    w = np.array([0.0, 1.0, 2.0, 3.0])
    est = estimates.weighted_estimate(w.sum(), (w * w).sum(), 4, w.max())
    assert est.value == pytest.approx(1.5)
    assert est.stderr == pytest.approx(math.sqrt(1.25 / 3))
    assert est.weight_max == 3.0
    assert math.isnan(estimates.weighted_estimate(0.0, 0.0, 0, 0.0).value)


def test_sigma_helpers():
    assert estimates.combined_sigma(3.0, 4.0) == pytest.approx(5.0)
    assert estimates.within_sigma(1.0, 1.2, 0.1)
    assert not estimates.within_sigma(1.0, 1.5, 0.1)
    assert estimates.z_score(1.0, 1.5, 0.25) == pytest.approx(2.0)
    assert estimates.z_score(1.0, 1.0, 0.0) == 0.0
    assert estimates.z_score(1.0, 2.0, 0.0) == math.inf


def test_chi_square_agreement(rng):
    probs = np.array([0.5, 0.3, 0.2])
    observed = np.bincount(rng.choice(3, size=5_000, p=probs), minlength=3)
    _, p_value, passed = estimates.chi_square_agreement(observed, probs, alpha=0.001)
    assert passed and 0.0 <= p_value <= 1.0
    _, _, passed = estimates.chi_square_agreement([4000, 500, 500], probs)
    assert not passed


def test_two_sample_tests(rng):
    _, _, same = estimates.two_sample_chi_square([100, 200, 0], [110, 190, 0], alpha=0.001)
    assert same
    _, _, same = estimates.ks_agreement(rng.normal(size=2_000), rng.normal(size=2_000), alpha=0.001)
    assert same
    _, _, same = estimates.ks_agreement(rng.normal(size=2_000), rng.normal(1.0, size=2_000))
    assert not same


def test_median_of_means():
    values = np.concatenate([np.ones(99), [1e9]])
    assert estimates.median_of_means(values, groups=10) == pytest.approx(1.0)


def test_nonincreasing_within():
    assert estimates.nonincreasing_within([0.3, 0.2, 0.21], [0.01, 0.01, 0.01])
    assert not estimates.nonincreasing_within([0.1, 0.3], [0.01, 0.01])
    assert estimates.nonincreasing_within([], [])
