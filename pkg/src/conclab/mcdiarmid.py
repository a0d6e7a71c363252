"""Bounded-difference (sensitivity-Delta) functions and Monte Carlo checks.

A function of ``n`` coordinates is sensitivity-Delta when replacing any single
coordinate moves its value by at most Delta.  The checks here estimate
``E[max_t (f(X^t) - E f)]`` over ``m`` i.i.d. columns and the upper tail
``P(f - E f >= eps n Delta)``.  ``E f`` is never taken as known: it is always
estimated from an independent sample ten times the size of the main run.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import bounds
from .dist import BoundedDist, sample_indices
from .errors import DomainError
from .stats import RunningMean, binomial_ci

CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class SensitivityFunction:
    """``evaluator`` maps an array of shape ``(..., n)`` to shape ``(...)``."""

    name: str
    n: int
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    declared_delta: float
    domain: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)

    def __post_init__(self):
        if self.declared_delta < 0:
            raise DomainError("declared_delta must be >= 0")

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=np.float64))


def sum_function(n: int, domain=(0.0, 0.25, 0.5, 0.75, 1.0)) -> SensitivityFunction:
    return SensitivityFunction("sum", n, lambda x: x.sum(axis=-1), 1.0, tuple(domain))


def max_function(n: int, domain=(0.0, 0.25, 0.5, 0.75, 1.0)) -> SensitivityFunction:
    return SensitivityFunction("max", n, lambda x: x.max(axis=-1), 1.0, tuple(domain))


def range_function(n: int, domain=(0.0, 0.25, 0.5, 0.75, 1.0)) -> SensitivityFunction:
    return SensitivityFunction("range", n, lambda x: x.max(axis=-1) - x.min(axis=-1), 1.0, tuple(domain))


def quadratic_function(n: int, domain=(0.0, 0.25, 0.5, 0.75, 1.0)) -> SensitivityFunction:
    """``(sum x)^2 / n``; one coordinate moves the sum by <= 1, so Delta = (2n-1)/n."""
    return SensitivityFunction("quadratic", n, lambda x: x.sum(axis=-1) ** 2 / n, (2 * n - 1) / n, tuple(domain))


def constant_function(n: int, value: float = 0.5, domain=(0.0, 0.5, 1.0)) -> SensitivityFunction:
    return SensitivityFunction("constant", n, lambda x: np.full(x.shape[:-1], value), 0.0, tuple(domain))


SHIPPED = {
    "sum": sum_function,
    "max": max_function,
    "range": range_function,
    "quadratic": quadratic_function,
}


def make_function(name: str, n: int, domain=None) -> SensitivityFunction:
    try:
        factory = SHIPPED[name]
    except KeyError:
        raise DomainError(f"unknown function {name!r}; choose from {sorted(SHIPPED)}") from None
    return factory(n) if domain is None else factory(n, tuple(domain))


@dataclass(frozen=True)
class SensitivityProbe:
    observed: float
    declared: float
    witness: tuple | None  # (x, i, replacement) attaining ``observed``

    @property
    def holds(self) -> bool:
        return self.observed <= self.declared + 1e-12


def verify_sensitivity(f: SensitivityFunction, probes: int, rng: np.random.Generator) -> SensitivityProbe:
    """Random single-coordinate replacements over ``f.domain``."""
    if probes < 1:
        raise DomainError("probes must be >= 1")
    dom = np.asarray(f.domain)
    x = dom[rng.integers(0, len(dom), size=(probes, f.n))]
    i = rng.integers(0, f.n, size=probes)
    new = dom[rng.integers(0, len(dom), size=probes)]
    y = x.copy()
    y[np.arange(probes), i] = new
    diff = np.abs(f(x) - f(y))
    k = int(np.argmax(diff))
    return SensitivityProbe(float(diff[k]), f.declared_delta, (tuple(x[k]), int(i[k]), float(new[k])))


def exhaustive_sensitivity(f: SensitivityFunction, limit: int = 3**6) -> SensitivityProbe:
    """Exact sensitivity of ``f`` restricted to ``f.domain ** n``."""
    dom = np.asarray(f.domain)
    if len(dom) ** f.n > limit:
        raise DomainError(f"{len(dom)}^{f.n} points exceed the exhaustive limit {limit}")
    pts = np.array(list(itertools.product(dom, repeat=f.n)))
    base = f(pts)
    best, witness = 0.0, None
    for i in range(f.n):
        for v in dom:
            y = pts.copy()
            y[:, i] = v
            diff = np.abs(f(y) - base)
            k = int(np.argmax(diff))
            if diff[k] > best:
                best, witness = float(diff[k]), (tuple(pts[k]), i, float(v))
    return SensitivityProbe(best, f.declared_delta, witness)


def _sample_columns(dists: Sequence[BoundedDist], count: int, rng: np.random.Generator) -> np.ndarray:
    first = dists[0]
    if all(d is first or np.array_equal(d.weights, first.weights) for d in dists):
        return sample_indices(first.weights, rng, (count, len(dists))) / first.denominator
    out = np.empty((count, len(dists)))
    for i, d in enumerate(dists):
        out[:, i] = sample_indices(d.weights, rng, count) / d.denominator
    return out


def _check_inputs(f: SensitivityFunction, dists: Sequence[BoundedDist], trials: int) -> None:
    if len(dists) != f.n:
        raise DomainError(f"{f.name} takes {f.n} coordinates, got {len(dists)} distributions")
    if trials < 1:
        raise DomainError("trials must be >= 1")


def estimate_mean(f: SensitivityFunction, dists: Sequence[BoundedDist], count: int, rng) -> RunningMean:
    rm = RunningMean()
    step = max(1, CHUNK_ELEMENTS // f.n)
    done = 0
    while done < count:
        k = min(step, count - done)
        rm.update(f(_sample_columns(dists, k, rng)))
        done += k
    return rm


@dataclass(frozen=True)
class SensMaxResult:
    estimate: float
    ci: tuple[float, float]
    bound: float
    mean_f: float
    mean_f_ci: tuple[float, float]
    informational: bool

    @property
    def holds(self) -> bool:
        return self.ci[1] <= self.bound


def sens_max_check(
    f: SensitivityFunction,
    dists: Sequence[BoundedDist],
    m: int,
    trials: int,
    rng: np.random.Generator,
    confidence: float = 0.99,
) -> SensMaxResult:
    """Estimate ``E[max_t (f(X^t) - E f)]`` and compare with ``8 Delta sqrt(n ln m)``.

    The interval adds the half-widths of the two independent estimates
    (the maximum term and ``E f``).  ``m == 1`` makes the bound 0; that case
    is flagged ``informational``.
    """
    _check_inputs(f, dists, trials)
    mean_rm = estimate_mean(f, dists, 10 * trials, rng)
    ef_lo, ef_hi = mean_rm.interval(confidence)

    max_rm = RunningMean()
    step = max(1, CHUNK_ELEMENTS // (f.n * m))
    done = 0
    while done < trials:
        k = min(step, trials - done)
        vals = f(_sample_columns(dists, k * m, rng)).reshape(k, m)
        max_rm.update(vals.max(axis=1))
        done += k
    mx_lo, mx_hi = max_rm.interval(confidence)
    est = max_rm.mean - mean_rm.mean
    bound = bounds.sens_max_bound(f.n, m, f.declared_delta).value
    return SensMaxResult(est, (mx_lo - ef_hi, mx_hi - ef_lo), bound, mean_rm.mean, (ef_lo, ef_hi), m == 1)


@dataclass(frozen=True)
class TailResult:
    eps: float
    threshold: float
    hits: int
    trials: int
    tail: float
    ci: tuple[float, float]
    bound: bounds.BoundValue

    @property
    def holds(self) -> bool:
        return self.ci[0] <= self.bound.value


def mcdiarmid_check(
    f: SensitivityFunction,
    dists: Sequence[BoundedDist],
    eps_grid: Sequence[float],
    trials: int,
    rng: np.random.Generator,
    confidence: float = 0.99,
) -> list[TailResult]:
    """Empirical ``P(f - E f >= eps n Delta)`` with Clopper-Pearson intervals.

    The event is evaluated at ``E f``'s upper confidence limit plus
    ``eps n Delta``; that event is contained in the true one (with the stated
    confidence), so the interval's lower end is a valid lower limit for the
    true tail and is what gets compared with the bound.
    """
    _check_inputs(f, dists, trials)
    mean_rm = estimate_mean(f, dists, 10 * trials, rng)
    ef_hi = mean_rm.interval(confidence)[1]

    step = max(1, CHUNK_ELEMENTS // f.n)
    chunks = []
    done = 0
    while done < trials:
        k = min(step, trials - done)
        chunks.append(f(_sample_columns(dists, k, rng)))
        done += k
    vals = np.concatenate(chunks)

    out = []
    for eps in eps_grid:
        thr = ef_hi + eps * f.n * f.declared_delta
        hits = int(np.count_nonzero(vals >= thr))
        out.append(
            TailResult(
                float(eps), thr, hits, trials, hits / trials,
                binomial_ci(hits, trials, confidence),
                bounds.mcdiarmid_tail(f.n, f.declared_delta, eps),
            )
        )
    return out
