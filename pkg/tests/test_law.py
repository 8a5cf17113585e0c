import math

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from bullets.errors import SizeLimit
from bullets.law import (central_moments_floating, decomposition, factorial_moments, q_exact,
                         q_exact_rational_recurrence, q_floating, q_moments, sample_markov,
                         zero_product)
from bullets.models import compare_empirical
from bullets.rng import stream


def test_small_laws():
    assert q_exact(0).mass == {0: 1}
    assert q_exact(1).mass == {1: 1}
    assert q_exact(2).mass == {0: mpq(1, 2), 2: mpq(1, 2)}
    assert q_exact(3).mass == {1: mpq(5, 6), 3: mpq(1, 6)}
    assert q_exact(4).mass == {0: mpq(3, 8), 2: mpq(7, 12), 4: mpq(1, 24)}


def test_integer_and_rational_routes_agree():
    for n in range(0, 80):
        assert q_exact(n).mass == q_exact_rational_recurrence(n)


def test_normalization_and_parity():
    for n in range(0, 501, 7):
        law = q_exact(n).mass
        assert sum(law.values()) == 1
        assert all(k % 2 == n % 2 for k in law)


def test_zero_product():
    for m in range(1, 101):
        assert q_exact(2 * m).mass.get(0, 0) == zero_product(m)


@given(st.integers(min_value=2, max_value=60))
def test_decomposition_is_the_recurrence(n):
    law = q_exact(n).mass
    for k in range(n + 1):
        assert decomposition(n, k) == law.get(k, 0)


def test_size_limit():
    with pytest.raises(SizeLimit):
        q_exact(20, max_n=10)


def test_moments_exact():
    assert q_moments(2) == (1, 1)
    assert q_moments(3)[0] == mpq(4, 3)


def test_floating_routes_match_exact():
    for n in (5, 40, 200):
        mean, var = q_moments(n)
        fm, fv = q_moments(n, "floating")
        assert math.isclose(fm, float(mean), rel_tol=1e-12)
        assert math.isclose(fv, float(var), rel_tol=1e-10)
        q = q_floating(n)
        exact = q_exact(n).probabilities()
        assert max(abs(q[k] - float(p)) for k, p in exact.items()) < 1e-14
    F = factorial_moments(30, 3)
    law = q_exact(30).mass
    assert math.isclose(F[3], float(sum(k * (k - 1) * (k - 2) * p for k, p in law.items())), rel_tol=1e-12)


def test_large_n_moments():
    mean, var = q_moments(10 ** 6, "floating")
    assert abs(mean - 0.5 * math.log(10 ** 6)) <= 1
    assert abs(var - 0.5 * math.log(10 ** 6)) <= 1.5


def test_skewness_decreases():
    skews = [central_moments_floating(10 ** e)[2] for e in (3, 4, 5)]
    assert skews[0] > skews[1] > skews[2] > 0


def test_markov_sampler():
    g = stream(3)
    assert sample_markov(0, g) == 0 and sample_markov(1, g) == 1
    draws = [sample_markov(10, g) for _ in range(100_000)]
    assert all(k % 2 == 0 for k in draws)
    tv, _, p = compare_empirical(draws, q_exact(10))
    assert tv < 0.02 and p > 1e-3
