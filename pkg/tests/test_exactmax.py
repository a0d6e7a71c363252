import itertools
import math

import numpy as np
import pytest

from conclab import bounds
from conclab.dist import BoundedDist, binomial_sum, convolve_sum, point_mass, sample
from conclab.errors import DomainError
from conclab.exactmax import (
    expected_max_of_iid,
    expected_max_sum,
    lemma_maxtb_check,
    prob_max_at_least,
    proxy_vs_bound,
)


def max_proxy_by_enumeration(s, m):
    """Oracle: E[max{0, Y^1..Y^m}] summed over every m-tuple of outcomes."""
    ys = s.values - s.mean
    total = 0.0
    for ks in itertools.product(range(len(ys)), repeat=m):
        w = math.prod(s.weights[k] for k in ks)
        total += w * max(0.0, *(ys[k] for k in ks))
    return total


@pytest.mark.parametrize("n,m,p", [(1, 1, 0.5), (2, 2, 0.3), (3, 3, 0.5), (4, 2, 0.9), (5, 4, 0.1)])
def test_proxy_matches_enumeration(n, m, p):
    s = binomial_sum(n, p)
    assert expected_max_of_iid(s, m) == pytest.approx(max_proxy_by_enumeration(s, m), rel=1e-12, abs=1e-15)


def test_proxy_on_non_binomial_grid():
    s = convolve_sum([BoundedDist(3, [0.1, 0.4, 0.2, 0.3])] * 2)
    assert expected_max_of_iid(s, 3) == pytest.approx(max_proxy_by_enumeration(s, 3), rel=1e-12)


def test_single_copy_proxy_is_half_mean_absolute_deviation():
    # E[max{0, Y}] = E|Y| / 2 because E[Y] = 0
    s = binomial_sum(20, 0.3)
    mad = math.fsum(s.weights * np.abs(s.values - s.mean))
    assert expected_max_of_iid(s, 1) == pytest.approx(mad / 2, rel=1e-12)


def test_without_zero_single_copy_is_the_mean():
    s = binomial_sum(20, 0.3)
    assert expected_max_of_iid(s, 1, include_zero=False) == pytest.approx(0.0, abs=1e-12)
    assert expected_max_sum(s, 1) == pytest.approx(6.0, rel=1e-12)


def test_proxy_monotone_in_m():
    s = binomial_sum(64, 0.5)
    vals = [expected_max_of_iid(s, m) for m in (1, 2, 4, 16, 256, 4096)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_point_mass_proxy_is_zero():
    s = convolve_sum([point_mass(0.5, 2)] * 4)
    assert expected_max_of_iid(s, 16) == 0.0
    r = lemma_maxtb_check(s, 16)
    assert r.degenerate and r.tail_at_threshold == 1.0


def test_prob_max_stable_for_tiny_survival():
    sf = np.array([1.0, 1e-300, 1e-18, 0.0])
    got = prob_max_at_least(sf, 4096)
    assert got[0] == 1.0 and got[-1] == 0.0
    assert got[2] == pytest.approx(4096e-18, rel=1e-9)
    assert got[1] == pytest.approx(4096e-300, rel=1e-9)


def test_bad_m():
    with pytest.raises(DomainError):
        expected_max_of_iid(binomial_sum(4, 0.5), 0)


@pytest.mark.parametrize("n,m,p", [(16, 16, 0.5), (64, 256, 0.1), (256, 2, 0.9), (4, 4096, 0.5)])
def test_proxy_agrees_with_monte_carlo(n, m, p, rng):
    s = binomial_sum(n, p)
    exact = expected_max_of_iid(s, m)
    draws = sample(s, rng, (20_000, m)) - s.mean
    z = np.maximum(draws.max(axis=1), 0.0)
    half = 3.3 * z.std(ddof=1) / math.sqrt(len(z))
    assert abs(z.mean() - exact) <= half


def test_maxtb_holds_on_small_grid():
    for n, m, p in itertools.product((4, 16, 64), (2, 16, 256), (0.1, 0.5, 0.9)):
        r = lemma_maxtb_check(binomial_sum(n, p), m)
        assert not r.degenerate
        assert r.holds, (n, m, p, r)
        assert r.maxtb_budget == pytest.approx(math.log(2) / m)


def test_proxy_vs_closed_form():
    r = proxy_vs_bound(binomial_sum(100, 0.5), 1000)
    assert r.closed_form == pytest.approx(4 * math.sqrt(100 * math.log(1001)), rel=1e-14)
    assert r.closed_form == pytest.approx(105.1380409124326, rel=1e-12)
    assert r.holds and not r.trivial_regime
    assert proxy_vs_bound(binomial_sum(2, 0.5), 16).trivial_regime


def test_closed_form_proxy_dominates_exact_for_single_variable():
    r = proxy_vs_bound(binomial_sum(1, 0.5), 1)
    assert r.closed_form == bounds.proxy_bound(1, 1).value
    assert r.exact_proxy == pytest.approx(0.25)
