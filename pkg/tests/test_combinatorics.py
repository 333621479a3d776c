from fractions import Fraction

import numpy as np
import pytest

from uipt_percolation import combinatorics as comb


def test_partition_function_small_values():
    assert comb.partition_function(2) == Fraction(9, 8)
    assert comb.partition_function(3) == Fraction(27, 16)
    assert comb.partition_function(4) == Fraction(729, 128)


def test_recurrence_matches_factorial_form():
    table = comb.EnumerationTable(max_index=64)
    for m in range(2, 66):
        assert table.z(m) == comb.partition_function_closed(m)
    for k in range(1, 65):
        assert table.p(k) == comb.halfplane_pk_closed(k)


def test_table_falls_back_to_closed_form_beyond_cache():
    table = comb.EnumerationTable(max_index=8)
    assert table.z(20) == comb.partition_function_closed(20)
    assert table.p(30) == comb.halfplane_pk_closed(30)


def test_indices_beyond_default_cache():
    k = 4 * comb.DEFAULT_MAX_INDEX
    exact = comb.halfplane_pk(k)
    assert exact == comb.halfplane_pk_closed(k)
    assert np.exp(comb.log_halfplane_pk(k)) == pytest.approx(float(exact), rel=1e-9)
    assert comb.tail_mass(k) == (2 * k - 1) * exact / 3
    # p_k ~ k^{-5/2} / (4 sqrt(pi)) up to a 1/k correction
    big = 10 ** 6
    asymptote = 1.0 / (4.0 * np.sqrt(np.pi)) * big ** -2.5
    assert np.exp(comb.log_halfplane_pk(big)) == pytest.approx(asymptote, rel=1e-5)


def test_halfplane_pk_values():
    assert comb.halfplane_pk(1) == Fraction(1, 8)
    assert comb.halfplane_pk(2) == Fraction(1, 48)
    assert comb.halfplane_pk(3) == Fraction(1, 128)
    for k in range(1, 20):
        assert comb.halfplane_pk(k) == comb.partition_function(k + 1) / Fraction(9) ** k


def test_tail_mass_and_mean_tail():
    assert comb.tail_mass(0) == Fraction(1, 6)
    assert comb.tail_mass(1) == Fraction(1, 24)
    assert comb.mean_tail(0) == Fraction(1, 3)
    for K in range(1, 40):
        assert comb.tail_mass(K - 1) - comb.tail_mass(K) == comb.halfplane_pk(K)
        assert comb.mean_tail(K - 1) - comb.mean_tail(K) == K * comb.halfplane_pk(K)


@pytest.mark.parametrize("K", [0, 1, 10, 1000])
def test_step_law_normalization(K):
    head = sum((comb.halfplane_pk(k) for k in range(1, K + 1)), Fraction(0))
    assert Fraction(2, 3) + 2 * (head + comb.tail_mass(K)) == 1


def test_boundary_walk_is_centered():
    assert Fraction(1, 3) - comb.mean_tail(0) == 0


def test_free_peeling_law_sums_to_one():
    assert comb.peel_internal_free(2) == Fraction(1, 9)
    assert comb.peel_internal_free(3) == Fraction(1, 4)
    assert comb.peel_internal_free(6) == Fraction(3, 7)
    assert comb.peel_split_free(4, 1) == Fraction(1, 3)
    for m in range(2, 40):
        total = comb.peel_internal_free(m) + sum(
            (comb.peel_split_free(m, k) for k in range(1, m - 1)), Fraction(0)
        )
        assert total == 1
        assert comb.peel_internal_free(m) == comb.partition_function(m + 1) / (
            comb.ALPHA * comb.partition_function(m)
        )


def test_uipt_peeling_law_sums_to_one():
    assert comb.peel_internal_uipt(3) == Fraction(5, 6)
    assert comb.peel_internal_uipt(4) == Fraction(7, 9)
    assert comb.peel_internal_uipt(10) == Fraction(19, 27)
    assert comb.peel_split_uipt(3, 1) == Fraction(1, 12)
    for m in range(3, 40):
        total = comb.peel_internal_uipt(m) + 2 * sum(
            (comb.peel_split_uipt(m, k) for k in range(1, m - 1)), Fraction(0)
        )
        assert total == 1


def test_uipt_split_tends_to_halfplane_pk():
    # C_{m-k} / C_m -> 9^{-k} as m grows
    for k in (1, 2, 5):
        assert float(comb.peel_split_uipt(100_000, k)) == pytest.approx(
            float(comb.halfplane_pk(k)), rel=1e-3
        )


def test_uipt_ratio_is_consistent_with_float_constants():
    ratio = float(comb.uipt_ratio(30, 20))
    approx = comb.uipt_partition_function_float(30) / comb.uipt_partition_function_float(20)
    assert ratio == pytest.approx(approx, rel=1e-10)
    assert comb.uipt_ratio(20, 30) == 1 / comb.uipt_ratio(30, 20)


def test_log_helpers_match_exact_values():
    ms = np.arange(2, 60)
    exact = np.array([float(comb.partition_function(int(m))) for m in ms])
    np.testing.assert_allclose(np.exp(comb.log_partition_function(ms)), exact, rtol=1e-10)
    ks = np.arange(1, 60)
    exact_p = np.array([float(comb.halfplane_pk(int(k))) for k in ks])
    np.testing.assert_allclose(np.exp(comb.log_halfplane_pk(ks)), exact_p, rtol=1e-10)
    exact_t = np.array([float(comb.tail_mass(int(k))) for k in ks])
    np.testing.assert_allclose(np.exp(comb.log_tail_mass(ks)), exact_t, rtol=1e-10)


def test_generating_function():
    assert comb.pk_generating_function(1.0) == pytest.approx(1.0 / 6.0)
    w = 0.3
    series = sum(float(comb.halfplane_pk(k)) * w ** k for k in range(1, 200))
    assert comb.pk_generating_function(w) == pytest.approx(series, rel=1e-12)
    with pytest.raises(ValueError):
        comb.pk_generating_function(1.5)


def test_gamma_prime():
    assert comb.gamma_prime() == pytest.approx(1.0 / (36.0 * np.sqrt(np.pi)))


@pytest.mark.parametrize(
    "fn, arg",
    [
        (comb.partition_function, 1),
        (comb.halfplane_pk, 0),
        (comb.tail_mass, -1),
        (comb.peel_internal_uipt, 2),
        (comb.halfplane_pk, 2.5),
        (comb.halfplane_pk, True),
    ],
)
def test_invalid_indices_are_rejected(fn, arg):
    with pytest.raises(ValueError):
        fn(arg)


def test_split_distance_out_of_range():
    with pytest.raises(ValueError):
        comb.peel_split_free(5, 4)
    with pytest.raises(ValueError):
        comb.peel_split_uipt(5, 4)


def test_tables_and_formatting():
    rows = comb.pk_table(3)
    assert rows[0] == (1, Fraction(1, 8), Fraction(1, 24))
    assert [r[0] for r in rows] == [1, 2, 3]
    assert comb.partition_table(3)[0] == (2, Fraction(9, 8), Fraction(1, 9))
    assert comb.format_rational(Fraction(3, 6)) == "1/2"
    assert comb.format_rational(2) == "2/1"
