"""Exact oracles for the expected maximum of i.i.d. copies of a centred sum.

With ``Y = S - E[S]`` for a :class:`~conclab.dist.SumDist` ``S``, these compute
``E[max{0, Y^1, ..., Y^m}]`` and the tail-from-proxy quantities directly from
the exact law of ``S``.  Nothing here samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bounds
from .dist import SumDist, tail_ge
from .errors import DomainError


def prob_max_at_least(survival: np.ndarray, m: int) -> np.ndarray:
    """``P(max of m copies >= y_k) = 1 - (1 - sf_k)^m`` for each grid level.

    Evaluated as ``-expm1(m * log1p(-sf))``: stays accurate when ``sf`` is tiny
    (``F`` close to 1) and never forms ``F**m`` explicitly.
    """
    sf = np.clip(survival, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return -np.expm1(m * np.log1p(-sf))


def _layered_sum(levels: np.ndarray, p_ge: np.ndarray, floor: float | None) -> float:
    # E[Z] over grid levels y_0 < y_1 < ...:
    #   floor None: y_0 + sum_{k>=1} P(Z >= y_k) (y_k - y_{k-1})
    #   floor 0:    sum_{y_k > 0} P(Z >= y_k) (y_k - max(y_{k-1}, 0))
    if floor is None:
        terms = p_ge[1:] * np.diff(levels)
        return float(levels[0]) + math.fsum(terms)
    pos = np.flatnonzero(levels > floor)
    if len(pos) == 0:
        return float(floor)
    # levels are increasing, so positive levels are contiguous
    lower = np.concatenate(([floor], levels[pos[:-1]]))
    return float(floor) + math.fsum(p_ge[pos] * (levels[pos] - lower))


def expected_max_of_iid(s: SumDist, m: int, include_zero: bool = True) -> float:
    """``E[max{0, Y^1, ..., Y^m}]`` (or without the 0) for ``Y = S - E[S]``.

    Uses the survival-function (layered tail) form over the grid, so no pmf of
    the maximum is ever materialised.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    levels = s.values - s.mean
    p_ge = prob_max_at_least(s.survival(), int(m))
    return _layered_sum(levels, p_ge, 0.0 if include_zero else None)


def expected_max_sum(s: SumDist, m: int) -> float:
    """``E[max_t S^t]`` over ``m`` i.i.d. copies of the (uncentred) sum."""
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    p_ge = prob_max_at_least(s.survival(), int(m))
    return _layered_sum(s.values, p_ge, None)


def prob_centered_at_least(s: SumDist, y: float) -> float:
    """``P(Y >= y)`` for ``Y = S - E[S]``, left-continuous at atoms."""
    return tail_ge(s, y + s.mean)


@dataclass(frozen=True)
class MaxProxyResult:
    m: int
    proxy: float
    threshold: float
    tail_at_threshold: float
    maxtb_budget: float
    degenerate: bool

    @property
    def holds(self) -> bool:
        return self.tail_at_threshold <= self.maxtb_budget


def lemma_maxtb_check(s: SumDist, m: int) -> MaxProxyResult:
    """Evaluate ``P(Y >= 2 E[max{0, Y^1..Y^m}])`` against ``ln(2)/m`` exactly.

    ``degenerate`` marks a point-mass ``Y``; there the threshold is 0 and the
    tail is 1, a case the inequality does not cover.
    """
    proxy = expected_max_of_iid(s, m, include_zero=True)
    threshold = 2.0 * proxy
    tail = prob_centered_at_least(s, threshold)
    degenerate = int(np.count_nonzero(s.weights)) <= 1
    return MaxProxyResult(int(m), proxy, threshold, tail, bounds.maxtb_budget(m).value, degenerate)


@dataclass(frozen=True)
class ProxyComparison:
    exact_proxy: float
    closed_form: float
    trivial_regime: bool

    @property
    def holds(self) -> bool:
        return self.exact_proxy <= self.closed_form


def proxy_vs_bound(s: SumDist, m: int) -> ProxyComparison:
    """Exact max-proxy next to ``4 sqrt(n ln(m+1))``.

    ``trivial_regime`` is set when ``m >= e^n - 1``, where the bound exceeds
    ``n`` and so holds for any sum of ``n`` variables in [0, 1].
    """
    exact = expected_max_of_iid(s, m, include_zero=True)
    bound = bounds.proxy_bound(s.n, m).value
    trivial = m >= math.expm1(s.n) if s.n < 700 else False
    return ProxyComparison(exact, bound, trivial)
