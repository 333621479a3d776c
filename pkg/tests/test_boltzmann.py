import math
from fractions import Fraction

import numpy as np
import pytest

from uipt_percolation import boltzmann
from uipt_percolation import combinatorics as comb
from uipt_percolation.boltzmann import BoltzmannChainState, ChainTermination, PolygonConfig
from uipt_percolation.estimates import two_sample_chi_square
from uipt_percolation.peeling import CrossingResult


def test_polygon_config():
    cfg = PolygonConfig(1, 2, 3, 4)
    assert cfg.m == 10
    assert cfg.rotated() == PolygonConfig(2, 3, 4, 1)
    assert cfg.reflected() == PolygonConfig(3, 2, 1, 4)
    assert PolygonConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        PolygonConfig(0, 1, 1, 1)
    with pytest.raises(ValueError):
        PolygonConfig(1, 1.5, 1, 1)


@pytest.mark.parametrize("m", [2, 3, 10, 57, 200])
def test_bayes_event_identity(m):
    check = boltzmann.bayes_event_check(m)
    assert check.equal
    assert check.lhs == comb.peel_internal_free(m)


def test_free_peel_law_is_normalized():
    for M in (4, 10, 100, boltzmann.EXACT_PEEL_LIMIT + 50):
        cdf = boltzmann._free_peel_cdf(M)
        assert len(cdf) == M - 1
        assert cdf[-1] == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.diff(cdf) >= 0)


def test_square_crossing_is_one_half(rng):
    n = 20_000
    est = boltzmann.crossing_prob_direct(PolygonConfig(1, 1, 1, 1), n, rng, seed=7)
    assert est.seed == 7
    assert est.undetermined == 0
    assert abs(est.value - 0.5) <= 4 * est.stderr


def test_rotation_gives_complement(rng):
    cfg = PolygonConfig(2, 1, 3, 2)
    n = 20_000
    black = boltzmann.crossing_prob_direct(cfg, n, rng)
    rotated = boltzmann.crossing_prob_direct(cfg.rotated(), n, rng)
    sigma = math.hypot(black.stderr, rotated.stderr)
    assert abs(black.value + rotated.value - 1.0) <= 4 * sigma


def test_explore_polygon_budget(rng):
    outcome = boltzmann.explore_polygon(PolygonConfig(50, 50, 50, 50), rng, budget=1)
    assert outcome.result in (CrossingResult.UNDETERMINED, CrossingResult.BLACK,
                              CrossingResult.WHITE)
    assert outcome.steps_used == 1


def test_direct_counts_add_up(rng):
    counts = boltzmann.direct_counts(PolygonConfig(2, 2, 2, 2), 500, rng)
    assert counts["black"] + counts["white"] + counts["undetermined"] == 500
    assert counts["steps"] >= 500


@pytest.mark.slow
@pytest.mark.parametrize(
    "sides", [(1, 1, 1, 1), (2, 2, 2, 2), (3, 1, 3, 1), (1, 3, 1, 3), (2, 4, 2, 4)]
)
def test_estimators_agree(rng, sides):
    cfg = PolygonConfig(*sides)
    n = 20_000
    direct = boltzmann.crossing_prob_direct(cfg, n, rng)
    reweighted = boltzmann.crossing_prob_reweighted(cfg, n, rng, budget=10 ** 6)
    sigma = math.hypot(direct.stderr, reweighted.stderr)
    assert abs(direct.value - reweighted.value) <= 4 * sigma


def test_reweighted_sums_merge_like_one_run(rng):
    sums = boltzmann.reweighted_sums(PolygonConfig(2, 2, 2, 2), 2_000, rng, budget=10 ** 5)
    assert sums["determined"] + sums["undetermined"] == 2_000
    assert 0.0 <= sums["weight_max"]
    assert sums["weight_sq_sum"] >= sums["weight_sum"] ** 2 / max(sums["determined"], 1) - 1e-9
    est = boltzmann.reweighted_estimate(sums, seed=3)
    assert est.seed == 3
    assert est.samples == sums["determined"]


def test_estimators_reject_zero_samples(rng):
    cfg = PolygonConfig(1, 1, 1, 1)
    with pytest.raises(ValueError):
        boltzmann.crossing_prob_direct(cfg, 0, rng)
    with pytest.raises(ValueError):
        boltzmann.crossing_prob_reweighted(cfg, 0, rng)


def test_continuum_weight():
    assert boltzmann.continuum_weight(0.0, 1, 1, 1, 1) == pytest.approx(2.0 ** 2.5)
    assert boltzmann.continuum_weight(2.0, 1, 1, 1, 1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        boltzmann.continuum_weight(-3.0, 1, 1, 1, 1)


@pytest.mark.parametrize("state", [(1, 1, 1), (2, 3, 4), (5, 1, 2), (7, 7, 7)])
def test_chain_law_conserves_mass(state):
    law = boltzmann.chain_transition_law(BoltzmannChainState(*state))
    assert sum((p for _, p in law), Fraction(0)) == 1
    stops = [o for o, _ in law if isinstance(o, ChainTermination)]
    assert [s.w_position for s in stops] == list(range(1, state[2] + 1))


def test_chain_law_smallest_state():
    law = dict(boltzmann.chain_transition_law(BoltzmannChainState(1, 1, 1)))
    assert law[BoltzmannChainState(2, 1, 1)] == Fraction(1, 8)
    assert law[BoltzmannChainState(1, 2, 1)] == Fraction(1, 8)
    assert law[ChainTermination(1)] == Fraction(3, 4)


def test_chain_state_validation():
    with pytest.raises(ValueError):
        BoltzmannChainState(0, 1, 1)
    with pytest.raises(ValueError):
        BoltzmannChainState(1, 1, 0)


def test_chain_step_samples_law(rng):
    state = BoltzmannChainState(1, 1, 1)
    stops = sum(isinstance(boltzmann.chain_step(state, rng), ChainTermination) for _ in range(8_000))
    assert stops / 8_000 == pytest.approx(0.75, abs=0.02)


def test_w_distribution(rng):
    w = boltzmann.w_distribution(2, 2, 3, 2_000, rng)
    assert len(w.counts) == 3
    assert w.total + w.undetermined == 2_000
    assert [pos for pos, _ in w.rows()] == [1, 2, 3]

    single = boltzmann.w_distribution(1, 1, 1, 100, rng)
    assert single.rows() == [(1, 100)]


def test_w_distribution_is_symmetric(rng):
    w = boltzmann.w_distribution(3, 3, 4, 3_000, rng)
    n = w.total
    for i in range(2):
        p, q = w.counts[i] / n, w.counts[3 - i] / n
        assert abs(p - q) <= 4 * math.sqrt((p + q) / n)


def test_w_distribution_reflects(rng):
    n, c = 4_000, 4
    w = boltzmann.w_distribution(2, 5, c, n, rng)
    reflected = boltzmann.w_distribution(5, 2, c, n, rng)
    assert w.undetermined == reflected.undetermined == 0
    # stopping at k from (a, b) is stopping at c + 1 - k from (b, a)
    _, p_value, passed = two_sample_chi_square(w.counts, reflected.counts[::-1])
    assert passed, p_value


@pytest.mark.slow
def test_reweighted_reflection_and_rotation(rng):
    cfg = PolygonConfig(2, 1, 3, 2)
    n = 20_000
    base = boltzmann.crossing_prob_reweighted(cfg, n, rng, budget=10 ** 6)
    reflected = boltzmann.crossing_prob_reweighted(cfg.reflected(), n, rng, budget=10 ** 6)
    rotated = boltzmann.crossing_prob_reweighted(cfg.rotated(), n, rng, budget=10 ** 6)
    assert abs(base.value - reflected.value) <= 4 * math.hypot(base.stderr, reflected.stderr)
    assert abs(base.value + rotated.value - 1.0) <= 4 * math.hypot(base.stderr, rotated.stderr)


def test_jump_rate_asymptotics():
    report = boltzmann.jump_rate_asymptotics_check(
        1.0, 1.0, 1.0, [0.5], [100, 1000, 10000], z_fracs=[0.5], tolerance=0.02
    )
    assert report["pass"]
    last = report["rows"][-1]
    assert last["jump"]["0.5"] == pytest.approx(1.0, abs=0.02)
    assert last["stop"]["0.5"] == pytest.approx(1.0, abs=0.02)


def test_jump_rate_argument_checks():
    with pytest.raises(ValueError):
        boltzmann.jump_rate_asymptotics_check(1.0, 1.0, 1.0, [1.5], [100])
    with pytest.raises(ValueError):
        boltzmann.jump_rate_asymptotics_check(1.0, 1.0, 1.0, [0.5], [100], z_fracs=[2.0])
    with pytest.raises(ValueError):
        boltzmann.jump_rate_asymptotics_check(0.0, 1.0, 1.0, [0.5], [100])


def test_gamma_prime_estimate_converges():
    exact = comb.gamma_prime()
    assert boltzmann.gamma_prime_estimate(10 ** 6) == pytest.approx(exact, rel=5e-3)
    assert abs(boltzmann.gamma_prime_estimate(10 ** 4) / exact - 1) < abs(
        boltzmann.gamma_prime_estimate(100) / exact - 1
    )
