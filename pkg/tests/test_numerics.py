from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from artifact.numerics import (
    DomainError,
    binom,
    binom_cdf,
    binom_cdf_strict,
    binom_pmf,
    fmt_rational,
    parse_rational,
    partition_sum,
    partition_sum_direct,
    tie_share,
)

from conftest import interior, rationals


def test_binom_examples():
    assert binom(4, 2) == 6
    assert binom(5, 0) == 1
    assert binom(3, 5) == 0
    assert binom(3, -1) == 0


def test_pmf_and_cdf_examples():
    assert binom_pmf(2, F(1, 2), 1) == F(1, 2)
    assert binom_pmf(3, F(1, 3), 0) == F(2, 3) ** 3 == F(8, 27)
    assert binom_pmf(2, F(1, 2), 3) == 0
    assert binom_cdf(2, F(1, 2), 2) == 1
    assert binom_cdf_strict(2, F(1, 2), 0) == 0
    assert binom_cdf(2, F(1, 2), 1) == F(1, 4) + F(1, 2)


@pytest.mark.parametrize("p", [F(-1, 3), F(4, 3)])
def test_pmf_rejects_bad_probability(p):
    with pytest.raises(DomainError):
        binom_pmf(3, p, 1)
    with pytest.raises(DomainError):
        binom_cdf(3, p, 1)


def test_partition_sum_examples():
    assert partition_sum(2, F(1, 2), F(1, 2)) == F(3, 4)
    assert partition_sum(1, F(2, 7), F(3, 7)) == 1
    assert partition_sum(3, F(1, 3), 0) == F(1, 9)


def test_rational_text():
    assert parse_rational("3/4") == F(3, 4)
    assert parse_rational(" -2 ") == -2
    assert fmt_rational(F(2)) == "2/1"
    assert fmt_rational(F(-6, 4)) == "-3/2"
    for bad in ("0.5", "1e-3", "1/0", "a/b", "", "1/2/3"):
        with pytest.raises(DomainError):
            parse_rational(bad)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 12), rationals(), rationals())
def test_partition_sum_matches_direct_sum(n, p, q):
    assert partition_sum(n, p, q) == partition_sum_direct(n, p, q)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10), rationals())
def test_pmf_sums_to_one(m, p):
    assert sum(binom_pmf(m, p, k) for k in range(m + 1)) == 1
    assert binom_cdf(m, p, m) == 1


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10), st.data(), interior())
def test_conditional_binomial_lower_bound(m, data, p):
    k = data.draw(st.integers(1, m))
    cond = binom_pmf(m, p, k) / (1 - binom_cdf_strict(m, p, k))
    assert cond >= 1 - p * (m - k) / ((1 - p) * k)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), rationals(), rationals())
def test_tie_share_reduces_to_partition_sum(n, lo, ti):
    if lo + ti > 1:
        lo, ti = lo / 2, ti / 2
    assert tie_share([lo] * (n - 1), [ti] * (n - 1)) == partition_sum(n, lo, ti)
