import math

import numpy as np
import pytest
from scipy import integrate

from uipt_percolation import asp
from uipt_percolation.asp import AspSamplerConfig, SamplerMethod


def test_overshoot_cdf_closed_values():
    assert asp.overshoot_cdf_closed(1.0, 1.0) == pytest.approx(0.5)
    assert asp.overshoot_cdf_closed(3.0, 1.0) == pytest.approx(2.0 / 3.0)
    assert asp.overshoot_cdf_closed(1.0, 3.0) == pytest.approx(1.0 / 3.0)
    for a, b in [(0.2, 5.0), (2.0, 7.0), (1.5, 1.5)]:
        total = asp.overshoot_cdf_closed(a, b) + asp.overshoot_cdf_closed(b, a)
        assert total == pytest.approx(1.0)


def test_ratio_law_matches_overshoot_law():
    assert asp.ratio_law_closed(1.0) == pytest.approx(0.5)
    assert asp.ratio_law_closed(3.0 ** 1.5) == pytest.approx(1.0 / 3.0)
    for a, b in [(1.0, 2.0), (2.0, 1.0), (0.5, 4.0)]:
        t = (b / a) ** 1.5
        assert asp.ratio_law_closed(t) == pytest.approx(asp.overshoot_cdf_closed(a, b))


def test_density_integrates_to_survival():
    a = 2.0
    for b in (0.5, 2.0, 10.0):
        value, _ = integrate.quad(lambda y: asp.overshoot_density_closed(a, y), b, np.inf)
        assert value == pytest.approx(asp.overshoot_cdf_closed(a, b), rel=1e-6)


@pytest.mark.parametrize("args", [(0.0, 1.0), (-1.0, 2.0), (1.0, math.inf)])
def test_closed_forms_reject_non_positive(args):
    with pytest.raises(ValueError):
        asp.overshoot_cdf_closed(*args)


def test_stable_increments_have_no_upward_jumps(rng):
    x = asp.stable_increments(rng, 100_000)
    assert np.all(np.isfinite(x))
    assert np.sum(x > 10.0) == 0
    assert np.sum(x < -10.0) > 100


def test_sampler_config():
    config = AspSamplerConfig(lattice_scale=50, method=SamplerMethod.STABLE_EULER)
    assert AspSamplerConfig.from_dict(config.to_dict()) == config
    assert asp.sampler_method("stable-euler") == SamplerMethod.STABLE_EULER
    assert asp.sampler_method("walk_embedding") == SamplerMethod.WALK_EMBEDDING
    with pytest.raises(NotImplementedError):
        asp.sampler_method("brownian")
    with pytest.raises(ValueError):
        AspSamplerConfig(lattice_scale=0)
    with pytest.raises(ValueError):
        AspSamplerConfig(renewal_ratio=1)


def test_walk_embedding_overshoot(rng):
    config = AspSamplerConfig(lattice_scale=50)
    batch = asp.sample_first_passages(1.0, 4_000, config, rng)
    assert not batch.exhausted.any()
    assert np.all(batch.hit_time > 0)
    assert np.mean(batch.overshoot > 1.0) == pytest.approx(0.5, abs=0.05)


def test_euler_scheme_overshoot(rng):
    config = AspSamplerConfig(lattice_scale=100, method=SamplerMethod.STABLE_EULER)
    batch = asp.sample_first_passages(1.0, 4_000, config, rng)
    assert np.mean(batch.overshoot[batch.hit] > 1.0) == pytest.approx(0.5, abs=0.05)


def test_single_first_passage_budget(rng):
    config = AspSamplerConfig(lattice_scale=10_000, budget=5)
    sample = asp.sample_first_passage(1.0, config, rng)
    assert sample.exhausted
    assert sample.overshoot is None


def test_continuum_race_is_symmetric(rng):
    config = AspSamplerConfig(lattice_scale=30)
    race = asp.continuum_race(1.0, 1.0, 4_000, config, rng)
    assert race.decided.all()
    assert np.all(race.survivor[race.decided] > 0)
    assert np.mean(race.loser == 2) == pytest.approx(0.5, abs=0.05)


def test_symmetry_identity(rng):
    config = AspSamplerConfig(lattice_scale=50)
    report = asp.verify_symmetry(3.0, 1.0, 4_000, config, rng, tolerance=0.05)
    assert report.passed
    assert report.closed_form == pytest.approx(2.0 / 3.0)
    assert report.to_dict()["pass"] is True


def test_ratio_law_reports(rng):
    config = AspSamplerConfig(lattice_scale=50)
    reports = asp.verify_ratio_law([1.0, 8.0], 4_000, config, rng, tolerance=0.05)
    assert [r.parameters["t"] for r in reports] == [1.0, 8.0]
    assert all(r.passed for r in reports)


def test_race_identity(rng):
    config = AspSamplerConfig(lattice_scale=50)
    report = asp.verify_race_identity(3.0, 1.0, 4_000, config, rng, tolerance=0.05)
    assert report.passed


def test_mixed_identity_presets(rng):
    config = AspSamplerConfig(lattice_scale=30)
    for preset in ("constant", "adapted"):
        report = asp.verify_mixed_identity(1.0, 3.0, preset, 3_000, config, rng, tolerance=0.06)
        assert report.passed, report.to_dict()
        assert report.parameters["rates"] == preset
        if preset == "constant":
            first = report.details["first_hits_sum_negative"]
            second = report.details["second_hits_sum_negative"]
            sigma = math.sqrt((first["value"] + second["value"]) / first["samples"])
            assert abs(first["value"] - second["value"]) <= 4 * sigma
    with pytest.raises(NotImplementedError):
        asp.verify_mixed_identity(1.0, 3.0, "sometimes", 10, config, rng)


def test_walk_scaling_exact():
    report = asp.verify_walk_scaling(1.0, 3.0, [1, 10, 30, 100], 0, None)
    assert report.passed
    rows = report.details["rows"]
    assert [r["start"] for r in rows] == [1, 10, 30, 100]
    assert [r["target"] for r in rows] == [3, 30, 90, 300]
    assert np.all(np.diff([r["deviation"] for r in rows]) < 0)
    for r in rows:
        assert r["bracketed"]
        assert r["stderr"] < 1e-9
        assert r["truncated_value"] <= r["value"] + 1e-10
        assert r["value"] <= r["truncated_value"] + r["escape_mass"] + 1e-10

    equal = asp.verify_walk_scaling(1.0, 1.0, [10, 30], 0, None)
    assert equal.passed
    assert all(r["deviation"] < 1e-12 for r in equal.details["rows"])


def test_walk_scaling_monte_carlo(rng):
    report = asp.verify_walk_scaling(
        1.0, 1.0, [5, 20], 4_000, rng, terminal_tolerance=0.05, truncation=200,
        method="monte-carlo",
    )
    assert report.passed
    assert report.details["rows"][0]["truncation"] == 200


def test_walk_scaling_unknown_method():
    with pytest.raises(NotImplementedError):
        asp.verify_walk_scaling(1.0, 1.0, [10], 0, None, method="guess")


def test_scale_invariance(rng):
    config = AspSamplerConfig(lattice_scale=40)
    report = asp.verify_scale_invariance(1.0, 3_000, config, rng, alpha=0.001)
    assert report.passed
    assert 0.0 <= report.details["p_value"] <= 1.0


def test_three_segment_limit_is_symmetric(rng):
    config = AspSamplerConfig(lattice_scale=30)
    report = asp.three_segment_limit(2.0, 1.0, 2.0, 3_000, config, rng)
    assert report.identity == "three-segment"
    sigma = math.hypot(report.details["from_a"]["stderr"], report.details["from_c"]["stderr"])
    assert abs(report.estimate - report.closed_form) <= 4.0 * sigma
