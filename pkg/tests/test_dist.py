import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conclab.dist import (
    BoundedDist,
    bernoulli,
    binomial_sum,
    common_grid,
    convolve_sum,
    point_mass,
    sample,
    suffix_sums,
    tail_ge,
    tail_le,
    uniform_grid,
)
from conclab.errors import DomainError, GridError


def enumerate_sum_pmf(dists):
    """Oracle: pmf of the sum by brute-force enumeration of all outcomes."""
    D = dists[0].denominator
    out = np.zeros(len(dists) * D + 1)
    for ks in itertools.product(*(range(D + 1) for _ in dists)):
        out[sum(ks)] += math.prod(d.weights[k] for d, k in zip(dists, ks))
    return out


def test_bernoulli_examples():
    assert list(bernoulli(0.0).weights) == [1.0, 0.0]
    assert list(bernoulli(0.5).weights) == [0.5, 0.5]
    np.testing.assert_allclose(bernoulli(0.3).weights, [0.7, 0.3])


@pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
def test_bernoulli_rejects_outside_unit_interval(p):
    with pytest.raises(DomainError):
        bernoulli(p)


def test_bounded_dist_invariants():
    with pytest.raises(DomainError):
        BoundedDist(2, [0.5, 0.6, 0.0])
    with pytest.raises(DomainError):
        BoundedDist(1, [1.5, -0.5])
    with pytest.raises(GridError):
        BoundedDist(2, [0.5, 0.5])
    assert np.all(uniform_grid(4).values <= 1.0)


def test_convolve_identity_and_small_sums():
    s = convolve_sum([bernoulli(0.5)])
    np.testing.assert_array_equal(s.weights, [0.5, 0.5])
    np.testing.assert_allclose(convolve_sum([bernoulli(0.5)] * 2).weights, enumerate_sum_pmf([bernoulli(0.5)] * 2))
    np.testing.assert_allclose(convolve_sum([bernoulli(0.5)] * 2).weights, [0.25, 0.5, 0.25])
    np.testing.assert_allclose(convolve_sum([bernoulli(0.5)] * 3).weights, [1 / 8, 3 / 8, 3 / 8, 1 / 8])


def test_convolve_matches_enumeration_on_mixed_grid():
    dists = [uniform_grid(2), BoundedDist(2, [0.1, 0.2, 0.7]), bernoulli(0.4).on_grid(2)]
    np.testing.assert_allclose(convolve_sum(dists).weights, enumerate_sum_pmf(dists), rtol=0, atol=1e-15)


def test_convolve_errors():
    with pytest.raises(DomainError):
        convolve_sum([])
    with pytest.raises(GridError):
        convolve_sum([bernoulli(0.5), uniform_grid(3)])


def test_common_grid_rescales_to_lcm():
    a, b = common_grid([uniform_grid(2), uniform_grid(3)])
    assert a.denominator == b.denominator == 6
    assert a.mean == pytest.approx(0.5) and b.mean == pytest.approx(0.5)
    s = convolve_sum([a, b])
    assert s.mean == pytest.approx(1.0)


def test_tail_examples():
    s = binomial_sum(2, 0.5)
    assert tail_ge(s, 1) == pytest.approx(0.75)
    assert tail_ge(s, -1) == 1.0
    assert tail_ge(s, 3) == 0.0
    assert tail_le(s, 1) == pytest.approx(0.75)
    assert tail_le(s, -0.5) == 0.0


def test_tail_counts_atoms_on_threshold():
    s = binomial_sum(10, 0.3)
    # 0.1 * 30 = 3.0000000000000004 in floating point; the atom at 3 still counts
    assert tail_ge(s, 0.1 * 30) == pytest.approx(tail_ge(s, 3.0), rel=0, abs=0)


def test_sample_degenerate_and_mean(rng):
    assert all(sample(point_mass(0.5, 2), rng) == 0.5 for _ in range(50))
    assert all(sample(bernoulli(1.0), rng) == 1.0 for _ in range(50))
    draws = sample(bernoulli(0.5), rng, 10**6)
    assert abs(draws.mean() - 0.5) <= 0.002


def test_sample_is_deterministic_given_stream():
    from conclab.streams import make_stream

    d = BoundedDist(3, [0.1, 0.2, 0.3, 0.4])
    a = sample(d, make_stream(5, "x"), 1000)
    b = sample(d, make_stream(5, "x"), 1000)
    np.testing.assert_array_equal(a, b)


def test_sample_inverse_cdf_frequencies(rng):
    d = BoundedDist(3, [0.1, 0.0, 0.3, 0.6])
    idx = (sample(d, rng, 200_000) * 3).round().astype(int)
    freq = np.bincount(idx, minlength=4) / len(idx)
    assert freq[1] == 0.0
    np.testing.assert_allclose(freq, d.weights, atol=0.005)


@st.composite
def small_dists(draw, D=3):
    w = np.array(draw(st.lists(st.floats(0.0, 1.0), min_size=D + 1, max_size=D + 1)))
    if w.sum() == 0:
        w[0] = 1.0
    return BoundedDist(D, w / w.sum())


@settings(max_examples=60, deadline=None)
@given(st.lists(small_dists(), min_size=1, max_size=6), st.randoms(use_true_random=False))
def test_convolution_order_independent_and_mean_additive(dists, rnd):
    s1 = convolve_sum(dists)
    perm = list(dists)
    rnd.shuffle(perm)
    s2 = convolve_sum(perm)
    np.testing.assert_allclose(s1.weights, s2.weights, rtol=0, atol=1e-12)
    assert s1.mean == pytest.approx(math.fsum(d.mean for d in dists), abs=1e-10)
    assert abs(math.fsum(s1.weights) - 1.0) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(small_dists(), min_size=1, max_size=5), st.lists(st.floats(-1, 7), min_size=2, max_size=10))
def test_tail_nonincreasing(dists, ts):
    s = convolve_sum(dists)
    ts = sorted(ts)
    tails = [tail_ge(s, t) for t in ts]
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    assert tail_ge(s, 0.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.9])
@pytest.mark.parametrize("n", [1, 7, 64, 256])
def test_binomial_matches_closed_form(n, p):
    s = binomial_sum(n, p)
    # exact rational oracle on the double value of p
    fp = Fraction(p)
    for k in range(n + 1):
        exact = math.comb(n, k) * fp**k * (1 - fp) ** (n - k)
        assert s.weights[k] == pytest.approx(float(exact), rel=1e-10, abs=0)


@pytest.mark.parametrize("n", [256, 1024])
def test_normalisation_survives_long_convolutions(n):
    s = binomial_sum(n, 0.1)
    assert abs(math.fsum(s.weights) - 1.0) <= 1e-12
    assert abs(math.fsum(s.values * s.weights) - s.mean) <= 1e-10


def test_suffix_sums_match_fsum():
    w = binomial_sum(200, 0.3).weights
    sf = suffix_sums(w)
    for k in (0, 50, 60, 100, 150, 199, 200):
        assert sf[k] == pytest.approx(math.fsum(w[k:]), rel=1e-14)
