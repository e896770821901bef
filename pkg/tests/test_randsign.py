import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavebmo.dyadic import DyadicInterval, Grid, GridFunction, Interval, SCALAR, VectorSpace
from wavebmo.errors import DomainError, PreconditionError
from wavebmo.randsign import (SignSeries, contraction_check, expected_power_norm, kahane_ratio,
                              khintchine_compare, moment, stein_averaging_check)

from oracles import binomial_moment, sign_moment

L2_5 = VectorSpace(5, 2.0)
L3_5 = VectorSpace(5, 3.0)


def test_single_term_moment_is_its_norm():
    xi = np.array([[3.0, -4.0]])
    for p in (1, 1.7, 2, 6):
        assert moment(SignSeries(xi, VectorSpace(2, 2.0)), p).value == pytest.approx(5.0, rel=1e-15)


def test_orthogonal_unit_vectors():
    s = SignSeries(np.eye(2), VectorSpace(2, 2.0))
    assert moment(s, 2).value == pytest.approx(math.sqrt(2), rel=1e-15)


def test_three_ones_fourth_moment():
    # all 8 sign patterns: |S| = 3 twice, 1 six times -> E S^4 = 21
    got = moment(SignSeries(np.ones(3)), 4).value
    assert got == pytest.approx(sign_moment([[1.0]] * 3, 4) ** 0.25, rel=1e-15)
    assert got == pytest.approx(21 ** 0.25, rel=1e-15)
    assert binomial_moment(3, 4) == 21


def test_empty_series_and_bad_p():
    with pytest.raises(DomainError):
        moment(SignSeries(np.zeros((0, 1))), 2)
    with pytest.raises(DomainError):
        moment(SignSeries(np.ones(2)), 0.5)


@given(st.integers(1, 9), st.floats(1, 6), st.integers(1, 4), st.sampled_from([1.5, 2.0, 4.0]), st.integers(0, 2 ** 31))
@settings(max_examples=40, deadline=None)
def test_exact_moment_matches_enumeration_oracle(n, p, d, r, seed):
    rng = np.random.default_rng(seed)
    xi = rng.normal(size=(n, d))
    got = moment(SignSeries(xi, VectorSpace(d, r) if d > 1 else SCALAR), p)
    ref = sign_moment(xi, p, r if d > 1 else 2.0) ** (1 / p)
    assert got.mode == "exact"
    assert got.value == pytest.approx(ref, rel=1e-12)
    assert got.value >= np.max(np.sum(np.abs(xi) ** (r if d > 1 else 2), axis=1) ** (1 / (r if d > 1 else 2))) * (1 - 1e-12)


@given(st.integers(1, 8), st.integers(0, 2 ** 31), st.lists(st.booleans(), min_size=8, max_size=8))
@settings(max_examples=30, deadline=None)
def test_moment_is_symmetric_under_negation(n, seed, flips):
    xi = np.random.default_rng(seed).normal(size=(n, 5))
    flipped = xi * np.where(flips[:n], -1.0, 1.0)[:, None]
    a = moment(SignSeries(xi, L3_5), 3).value
    b = moment(SignSeries(flipped, L3_5), 3).value
    assert a == pytest.approx(b, rel=1e-14)


@given(st.integers(1, 10), st.integers(0, 2 ** 31))
@settings(max_examples=30, deadline=None)
def test_moment_monotone_in_p(n, seed):
    s = SignSeries(np.random.default_rng(seed).normal(size=(n, 5)), L3_5)
    vals = [moment(s, p).value for p in (1, 1.5, 2, 3, 5, 8)]
    assert all(b >= a * (1 - 1e-13) for a, b in zip(vals, vals[1:]))


@given(st.integers(1, 12), st.integers(0, 2 ** 31))
@settings(max_examples=30, deadline=None)
def test_p2_identity_in_hilbert_space(n, seed):
    xi = np.random.default_rng(seed).normal(size=(n, 5))
    assert moment(SignSeries(xi, L2_5), 2).value ** 2 == pytest.approx(float(np.sum(xi * xi)), rel=1e-13)


def test_khintchine_examples():
    lam = np.random.default_rng(0).normal(size=7)
    assert khintchine_compare(lam, 2) == pytest.approx(1.0, rel=1e-14)
    for p in (1, 3, 7):
        assert khintchine_compare([2.5], p) == pytest.approx(1.0, rel=1e-15)
    got = khintchine_compare(np.ones(10), 1)
    ref = binomial_moment(10, 1) / math.sqrt(10)
    assert got == pytest.approx(ref, rel=1e-14)
    # the exact value 0.7782 sits below sqrt(2/pi) = 0.7979: finite n approaches it from below
    assert 0.77 < got < math.sqrt(2 / math.pi) < 1.0


def test_contraction_examples():
    rng = np.random.default_rng(1)
    s = SignSeries(rng.normal(size=(10, 5)), L3_5)
    lhs, rhs, ok = contraction_check(s, np.ones(10), 3)
    assert lhs == rhs and ok
    lhs, rhs, ok = contraction_check(s, np.zeros(10), 3)
    assert lhs == 0.0 and ok
    lam = rng.uniform(-1, 1, 10)
    lhs, rhs, ok = contraction_check(s, lam, 3)
    assert ok and lhs <= rhs
    assert lhs == pytest.approx(sign_moment(s.terms * lam[:, None], 3, 3.0) ** (1 / 3), rel=1e-12)
    assert rhs == pytest.approx(sign_moment(s.terms, 3, 3.0) ** (1 / 3), rel=1e-12)
    with pytest.raises(PreconditionError):
        contraction_check(s, np.full(10, 1.5), 3)


@given(st.integers(1, 10), st.integers(0, 2 ** 31), st.floats(1, 5))
@settings(max_examples=40, deadline=None)
def test_contraction_holds_exactly(n, seed, p):
    rng = np.random.default_rng(seed)
    s = SignSeries(rng.normal(size=(n, 5)), L3_5)
    assert contraction_check(s, rng.uniform(-1, 1, n), p)[2]


def test_kahane_examples():
    one = SignSeries(np.array([[1.0, 2.0, 0.0, 0.0, 1.0]]), L3_5)
    for p, r in [(1, 4), (4, 1), (2, 3)]:
        assert kahane_ratio(one, p, r) == pytest.approx(1.0, rel=1e-14)
    s = SignSeries(np.random.default_rng(2).normal(size=(12, 5)), L2_5)
    assert kahane_ratio(s, 2.5, 2.5) == 1.0
    k = kahane_ratio(s, 4, 2)
    assert 1.0 <= k <= math.sqrt(3)
    ref = sign_moment(s.terms, 4) ** 0.25 / sign_moment(s.terms, 2) ** 0.5
    assert k == pytest.approx(ref, rel=1e-12)


def test_monte_carlo_agrees_and_is_reproducible():
    xi = np.random.default_rng(3).normal(size=(14, 5))
    s = SignSeries(xi, L3_5)
    exact = moment(s, 3)
    mc = moment(s, 3, exact_threshold=0, mc_samples=50_000, seed=9)
    again = moment(s, 3, exact_threshold=0, mc_samples=50_000, seed=9)
    assert mc.mode == "monte-carlo" and mc.stderr > 0
    assert mc == again
    assert abs(mc.value - exact.value) <= 4 * mc.stderr
    assert moment(s, 3, exact_threshold=0, mc_samples=50_000, seed=10).value != mc.value


def test_batched_expectation_matches_single():
    terms = np.random.default_rng(4).normal(size=(6, 8, 3))
    space = VectorSpace(3, 1.5)
    batch = expected_power_norm(terms, 2.5, space)
    for b in range(6):
        assert batch[b] == pytest.approx(sign_moment(terms[b], 2.5, 1.5), rel=1e-12)


# -- Stein averaging -----------------------------------------------------------

GRID = Grid.symmetric(3, 7)
I0 = Interval(0, 1)
NESTED = [DyadicInterval(-j, 0) for j in range(4)]


def test_stein_constants_are_fixed():
    fs = [GridFunction.constant(GRID, c) for c in (1.0, -2.0, 0.5, 3.0)]
    lhs, rhs, ratio = stein_averaging_check(fs, NESTED, I0, 3)
    assert lhs == pytest.approx(rhs, rel=1e-14) and ratio == pytest.approx(1.0, rel=1e-14)


def test_stein_mean_zero_single_interval():
    f = GridFunction.from_callable(GRID, lambda x: np.sin(2 * np.pi * x))
    lhs, rhs, _ = stein_averaging_check([f], [DyadicInterval(0, 0)], I0, 2)
    assert abs(lhs) < 1e-12 and rhs > 0.5


@given(st.integers(0, 2 ** 31))
@settings(max_examples=25, deadline=None)
def test_stein_p2_scalar_is_a_contraction(seed):
    rng = np.random.default_rng(seed)
    fs = [GridFunction(GRID, rng.normal(size=GRID.size)) for _ in NESTED]
    assert stein_averaging_check(fs, NESTED, I0, 2)[2] <= 1 + 1e-9


def test_stein_rejects_overlapping_non_nested():
    f = GridFunction.constant(GRID, 1.0)
    with pytest.raises(PreconditionError):
        stein_averaging_check([f, f], [DyadicInterval(0, 0), DyadicInterval(0, 0)], I0, 2)
    with pytest.raises(PreconditionError):
        stein_averaging_check([f], [DyadicInterval(0, 3)], I0, 2)
