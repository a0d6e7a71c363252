import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conclab import bounds
from conclab.dist import bernoulli, binomial_sum, uniform_grid
from conclab.errors import DomainError
from conclab.exactmax import expected_max_of_iid


def golden_section_min(f, lo, hi, tol=1e-12):
    """Oracle for the lambda optimiser: plain golden-section search."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    while b - a > tol * max(1.0, abs(a)):
        if f(c) < f(d):
            b, d = d, c
            c = b - g * (b - a)
        else:
            a, c = c, d
            d = a + g * (b - a)
    x = (a + b) / 2
    return x, f(x)


def test_additive_examples():
    b = bounds.additive_tail(1024, 0.5)
    assert b.value == pytest.approx(math.exp(-3), rel=1e-15)
    assert not b.vacuous
    zero = bounds.additive_tail(16, 0.0)
    assert zero.value == pytest.approx(math.e) and zero.vacuous


def test_proxy_and_budget_examples():
    assert bounds.proxy_bound(1, 1).value == pytest.approx(4 * math.sqrt(math.log(2)))
    assert bounds.proxy_bound(100, 1000).value == pytest.approx(105.1380409124326, rel=1e-12)
    assert bounds.proxy_bound(5, 0).value == 0.0
    assert bounds.maxtb_budget(1).value == pytest.approx(math.log(2))


def test_multiplicative_forms():
    full, simple = bounds.multiplicative_upper(32.0, 1.0)
    assert full.value == pytest.approx(math.e * 1.25 ** (-4.0), rel=1e-14)
    assert simple.value == pytest.approx(math.exp(0.5), rel=1e-14)
    _, none = bounds.multiplicative_upper(32.0, 10.5)
    assert none is None
    assert bounds.multiplicative_lower(64.0, 1.0).value == pytest.approx(math.exp(-1), rel=1e-14)
    with pytest.raises(DomainError):
        bounds.multiplicative_lower(10.0, 1.5)


def test_simplified_form_dominates_on_eps_up_to_ten():
    # e (1 + eps/4)^(-eps mu/8) <= e^(1 - eps^2 mu/64) iff ln(1 + eps/4) >= eps/8 on (0, 10]
    for eps in np.linspace(1e-6, 10.0, 10_001):
        assert math.log1p(eps / 4) >= eps / 8 - 1e-15
        for mu in (0.5, 8.0, 400.0):
            full, simple = bounds.multiplicative_upper(mu, float(eps))
            assert full.value <= simple.value * (1 + 1e-12)
    # and fails just past the crossover near eps = 10.05
    assert math.log1p(10.1 / 4) < 10.1 / 8


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 2000), st.floats(0.0, 1.0))
def test_vacuous_flag_tracks_value(n, eps):
    b = bounds.additive_tail(n, eps)
    assert b.vacuous == (b.value >= 1.0)
    assert 0.0 < b.value <= math.e


def test_domain_errors():
    with pytest.raises(DomainError):
        bounds.additive_tail(0, 0.1)
    with pytest.raises(DomainError):
        bounds.additive_tail(10, -0.1)
    with pytest.raises(DomainError):
        bounds.proxy_from_mgf(10, 5, 0.0)
    with pytest.raises(DomainError):
        bounds.proxy_bound(10, 1.5)


def test_hoeffding_mgf_dominates_exact_mgf():
    for d in (bernoulli(0.1), bernoulli(0.5), uniform_grid(4)):
        for lam in (-3.0, -0.5, 0.1, 1.0, 4.0):
            assert bounds.centered_mgf(d, lam) <= bounds.mgf_bound(1, lam).value * (1 + 1e-15)


def test_proxy_from_mgf_examples():
    assert bounds.proxy_from_mgf(10, 0, 0.7).value == 0.0
    # 2 ln(1 + 10 e^(3.125))
    want = 2.0 * math.log(1 + 10 * math.exp(3.125))
    assert bounds.proxy_from_mgf(100, 10, 0.5).value == pytest.approx(want, rel=1e-14)
    assert bounds.proxy_from_mgf(100, 10, 0.5).value == pytest.approx(10.86393832453122, rel=1e-12)
    # no overflow where m e^(lam^2 n/8) is astronomically large
    assert math.isfinite(bounds.proxy_from_mgf(10_000, 10**6, 5.0).value)


@pytest.mark.parametrize("n,m", [(100, 1000), (16, 2), (256, 4096)])
def test_optimal_lambda_matches_golden_section(n, m):
    f = lambda lam: bounds.proxy_from_mgf(n, m, lam).value  # noqa: E731
    _, want = golden_section_min(f, 1e-4, 10.0)
    got = bounds.optimal_proxy_from_mgf(n, m)
    assert got.value == pytest.approx(want, abs=1e-6)
    grid = np.linspace(1e-3, 3.0, 30_000)
    assert got.value <= min(f(x) for x in grid) + 1e-6


def test_mgf_route_against_closed_form_proxy():
    # The optimised MGF route is a valid bound on the exact max-proxy and is
    # tighter than 4 sqrt(n ln(m+1)); the ratio between them is a constant
    # that does not depend on n and tends to 4 sqrt(2) as m grows.
    for n, m in itertools.product((16, 64, 256), (2, 16, 256, 4096)):
        mgf = bounds.optimal_proxy_from_mgf(n, m).value
        closed = bounds.proxy_bound(n, m).value
        exact = expected_max_of_iid(binomial_sum(n, 0.5), m)
        assert exact <= mgf <= closed
        assert 4 * math.sqrt(2) - 1e-3 <= closed / mgf <= 6.4
    r16 = bounds.proxy_bound(16, 256).value / bounds.optimal_proxy_from_mgf(16, 256).value
    r256 = bounds.proxy_bound(256, 256).value / bounds.optimal_proxy_from_mgf(256, 256).value
    assert r16 == pytest.approx(r256, rel=1e-6)


def test_moment_route():
    b = bounds.proxy_from_moments(100, 10, 3)
    assert b.value == pytest.approx((10 * (2 * 100 * 3) ** 3) ** (1 / 6), rel=1e-14)
    best = bounds.best_proxy_from_moments(100, 1000)
    assert best.value <= min(bounds.proxy_from_moments(100, 1000, k).value for k in range(1, 201))
    assert expected_max_of_iid(binomial_sum(100, 0.5), 1000) <= best.value


def test_sensitivity_bounds():
    assert bounds.sens_max_bound(16, 16, 1.0).value == pytest.approx(8 * math.sqrt(16 * math.log(16)))
    assert bounds.sens_max_bound(16, 1, 1.0).value == 0.0
    b = bounds.mcdiarmid_tail(64, 1.0, 1.0)
    assert b.value == pytest.approx(math.exp(0.75)) and b.vacuous
    assert bounds.mcdiarmid_tail(1024, 1.0, 1.0).value == pytest.approx(math.exp(-3))


def test_formula_registry_names():
    assert {"additive", "proxy", "maxtb", "multiplicative", "lower", "mgf", "proxy-mgf", "mcdiarmid"} <= set(
        bounds.FORMULAS
    )
    assert bounds.FORMULAS["multiplicative-simplified"](mu=8.0, eps=11.0) is None
