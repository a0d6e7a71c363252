"""Confidence intervals for Monte Carlo estimates."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

MIN_EXPECTATION_TRIALS = 10_000


def binomial_ci(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Exact Clopper-Pearson interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    alpha = 1.0 - confidence
    low = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes, trials - successes + 1))
    high = 1.0 if successes == trials else float(stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return low, high


class RunningMean:
    """Streaming mean/variance (Chan et al. merge) for chunked Monte Carlo."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=np.float64).ravel()
        if len(x) == 0:
            return
        n_b = len(x)
        mean_b = float(x.mean())
        m2_b = float(((x - mean_b) ** 2).sum())
        n = self.count + n_b
        delta = mean_b - self.mean
        self.mean += delta * n_b / n
        self.m2 += m2_b + delta * delta * self.count * n_b / n
        self.count = n

    @property
    def std(self) -> float:
        return math.sqrt(self.m2 / (self.count - 1)) if self.count > 1 else 0.0

    def interval(self, confidence: float = 0.99) -> tuple[float, float]:
        return mean_ci_from_moments(self.mean, self.std, self.count, confidence)


def mean_ci_from_moments(mean: float, std: float, count: int, confidence: float = 0.99) -> tuple[float, float]:
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    half = z * std / math.sqrt(count)
    return mean - half, mean + half


def mean_ci(samples, confidence: float = 0.99) -> tuple[float, float]:
    """Normal-approximation interval for the mean of ``samples``."""
    rm = RunningMean()
    rm.update(samples)
    if rm.count < 2:
        raise ValueError("need at least two samples for a mean interval")
    return rm.interval(confidence)
