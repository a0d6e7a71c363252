"""Bounded discrete distributions on a rational grid in [0, 1].

A :class:`BoundedDist` puts mass on ``{k/D : 0 <= k <= D}``; the exact law of a
sum of ``n`` independent such variables is a :class:`SumDist` on
``{k/D : 0 <= k <= nD}``.  All distributions of one experiment share a single
denominator so convolution is plain integer-indexed polynomial
multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError, GridError

NORM_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def suffix_sums(w: np.ndarray) -> np.ndarray:
    """``out[k] = sum(w[k:])`` with Neumaier-compensated accumulation.

    Runs from the top of the grid down, i.e. from the smallest tail weights
    upward, which keeps relative accuracy in far tails.
    """
    out = np.empty(len(w), dtype=np.float64)
    s = 0.0
    c = 0.0
    for k in range(len(w) - 1, -1, -1):
        x = float(w[k])
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[k] = s + c
    return out


def _check_weights(weights: np.ndarray, what: str) -> None:
    if weights.ndim != 1 or len(weights) == 0:
        raise DomainError(f"{what}: weights must be a non-empty 1-D array")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise DomainError(f"{what}: weights must be finite and non-negative")
    total = math.fsum(weights)
    if abs(total - 1.0) > NORM_TOL:
        raise DomainError(f"{what}: weights sum to {total!r}, not 1")


@dataclass(frozen=True)
class BoundedDist:
    """Law of one variable on the grid ``{k/D : 0 <= k <= D}``."""

    denominator: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.denominator) != self.denominator or self.denominator < 1:
            raise GridError(f"denominator must be a positive integer, got {self.denominator!r}")
        w = _frozen(self.weights)
        object.__setattr__(self, "denominator", int(self.denominator))
        object.__setattr__(self, "weights", w)
        if len(w) != self.denominator + 1:
            raise GridError(f"expected {self.denominator + 1} weights, got {len(w)}")
        _check_weights(w, "BoundedDist")

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.denominator + 1) / self.denominator

    @property
    def mean(self) -> float:
        return math.fsum(self.values * self.weights)

    @property
    def support(self) -> np.ndarray:
        """Grid indices carrying positive mass."""
        return np.flatnonzero(self.weights > 0)

    def on_grid(self, denominator: int) -> "BoundedDist":
        """Re-express this law on a finer grid whose denominator is a multiple."""
        if denominator % self.denominator:
            raise GridError(f"{denominator} is not a multiple of {self.denominator}")
        w = np.zeros(denominator + 1)
        w[:: denominator // self.denominator] = self.weights
        return BoundedDist(denominator, w)


@dataclass(frozen=True)
class SumDist:
    """Exact law of ``X_1 + ... + X_n`` on ``{k/D : 0 <= k <= nD}``."""

    n: int
    denominator: int
    weights: np.ndarray = field(repr=False)
    mean: float

    def __post_init__(self):
        w = _frozen(self.weights)
        object.__setattr__(self, "weights", w)
        if self.n < 1:
            raise DomainError("a sum needs at least one summand")
        if len(w) != self.n * self.denominator + 1:
            raise GridError(f"expected {self.n * self.denominator + 1} weights, got {len(w)}")
        _check_weights(w, "SumDist")
        grid_mean = math.fsum(self.values * w)
        if abs(grid_mean - self.mean) > 1e-10 * max(1.0, abs(self.mean)):
            raise DomainError(f"declared mean {self.mean!r} disagrees with pmf mean {grid_mean!r}")

    @property
    def values(self) -> np.ndarray:
        return np.arange(len(self.weights)) / self.denominator

    def survival(self) -> np.ndarray:
        """``P(S >= k/D)`` for every grid index ``k``."""
        return suffix_sums(self.weights)


def bernoulli(p: float) -> BoundedDist:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Bernoulli parameter must lie in [0, 1], got {p!r}")
    return BoundedDist(1, [1.0 - p, p])


def point_mass(value: float, denominator: int) -> BoundedDist:
    k = round(value * denominator)
    if not 0 <= k <= denominator or abs(k / denominator - value) > 1e-12:
        raise GridError(f"{value!r} is not a point of the grid with denominator {denominator}")
    w = np.zeros(denominator + 1)
    w[k] = 1.0
    return BoundedDist(denominator, w)


def uniform_grid(denominator: int) -> BoundedDist:
    """Uniform law over the ``denominator + 1`` grid points."""
    return BoundedDist(denominator, np.full(denominator + 1, 1.0 / (denominator + 1)))


def common_grid(dists: Sequence[BoundedDist]) -> list[BoundedDist]:
    """Rescale every law onto the lcm of their denominators."""
    D = math.lcm(*(d.denominator for d in dists))
    return [d if d.denominator == D else d.on_grid(D) for d in dists]


def convolve_sum(dists: Sequence[BoundedDist]) -> SumDist:
    """Exact law of the sum of independent variables sharing one grid."""
    if len(dists) == 0:
        raise DomainError("convolve_sum needs at least one distribution")
    D = dists[0].denominator
    if any(d.denominator != D for d in dists):
        raise GridError("all distributions must share one denominator; rescale with common_grid first")
    acc = np.array(dists[0].weights)
    for d in dists[1:]:
        acc = np.convolve(acc, d.weights)
    # direct (non-FFT) convolution of non-negative arrays: no cancellation
    np.clip(acc, 0.0, None, out=acc)
    return SumDist(len(dists), D, acc, math.fsum(d.mean for d in dists))


@lru_cache(maxsize=256)
def binomial_sum(n: int, p: float) -> SumDist:
    """``convolve_sum`` of ``n`` i.i.d. Bernoulli(p), memoised."""
    return convolve_sum([bernoulli(p)] * n)


def _first_index_at_or_above(s: SumDist, t: float) -> int:
    # Snap t*D to the grid with a relative tolerance so atoms that sit on the
    # threshold up to rounding are counted as ">= t".
    x = t * s.denominator
    k = math.ceil(x - 1e-12 * max(1.0, abs(x)))
    return min(max(k, 0), len(s.weights))


def tail_ge(s: SumDist, t: float) -> float:
    """Exact ``P(S >= t)``."""
    k = _first_index_at_or_above(s, t)
    return math.fsum(np.sort(s.weights[k:]))


def tail_le(s: SumDist, t: float) -> float:
    """Exact ``P(S <= t)``."""
    x = t * s.denominator
    k = math.floor(x + 1e-12 * max(1.0, abs(x)))
    k = min(max(k, -1), len(s.weights) - 1)
    return math.fsum(np.sort(s.weights[: k + 1]))


def sample_indices(weights: np.ndarray, rng: np.random.Generator, size=None):
    """Draw grid indices from a weight vector by inverse CDF.

    A uniform weight vector is sampled directly as a bounded integer.
    """
    n_pts = len(weights)
    if np.all(weights == weights[0]):
        # uniform law: exact bounded-integer draw, far cheaper than u -> CDF
        dtype = np.int8 if n_pts <= 127 else np.int64
        return rng.integers(0, n_pts, size=size, dtype=dtype)
    u = rng.random(size)
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, n_pts - 1)


def sample(d: BoundedDist | SumDist, rng: np.random.Generator, size=None):
    """Draw grid values from ``d``; a scalar when ``size`` is None."""
    idx = sample_indices(d.weights, rng, size)
    if size is None:
        return int(idx) / d.denominator
    return idx / d.denominator
