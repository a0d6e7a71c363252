"""Stable selection over the columns of a bounded sample matrix.

Given ``x`` in ``[0,1]^{n x m}`` with column sums ``s_t``, the selection draws
column ``t`` with probability proportional to ``exp((eta/2) s_t)``.  This
module computes that law exactly (in log space), samples from it, and checks
its stability, accuracy and row-swap (hybrid) properties, plus the mirrored
min-selection with weights ``exp(-(eta/2) s_t)``.

Column indices are 0-based.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .dist import BoundedDist, SumDist, sample_indices
from .errors import DomainError
from .exactmax import expected_max_sum
from .stats import RunningMean

ENUMERATION_LIMIT = 2**20


@dataclass(frozen=True)
class SampleMatrix:
    """An ``n x m`` realisation; rows are variables, columns are copies."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.size == 0:
            raise DomainError(f"sample matrix must be a non-empty 2-D array, got shape {a.shape}")
        if not np.all((a >= 0.0) & (a <= 1.0)):
            raise DomainError("sample matrix entries must lie in [0, 1]")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    def column_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def replace_row(self, i: int, row) -> "SampleMatrix":
        if not 0 <= i < self.n:
            raise DomainError(f"row index {i} out of range for n={self.n}")
        row = np.asarray(row, dtype=np.float64)
        if row.shape != (self.m,):
            raise DomainError(f"replacement row must have length {self.m}")
        a = np.array(self.entries)
        a[i] = row
        return SampleMatrix(a)


@dataclass(frozen=True)
class SelectionPmf:
    probs: np.ndarray = field(repr=False)
    log_probs: np.ndarray = field(repr=False)
    eta: float
    log_normalizer: float


def _as_matrix(x) -> SampleMatrix:
    return x if isinstance(x, SampleMatrix) else SampleMatrix(x)


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not math.isfinite(eta) or eta <= 0.0:
        raise DomainError(f"eta must be finite and positive, got {eta!r}")
    return eta


def log_weights_from_sums(col_sums: np.ndarray, eta: float, sign: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Log-probabilities and log-normaliser over the last axis.

    ``sign=+1`` is the max-selection, ``sign=-1`` the min-selection.  Works on
    batches: leading axes index independent matrices.
    """
    scores = sign * 0.5 * eta * np.asarray(col_sums, dtype=np.float64)
    lse = logsumexp(scores, axis=-1, keepdims=True)
    return scores - lse, lse[..., 0]


def _pmf(x, eta: float, sign: float) -> SelectionPmf:
    x = _as_matrix(x)
    eta = _check_eta(eta)
    logp, lse = log_weights_from_sums(x.column_sums(), eta, sign)
    return SelectionPmf(np.exp(logp), logp, eta, float(lse))


def selection_pmf(x, eta: float) -> SelectionPmf:
    return _pmf(x, eta, 1.0)


def min_selection_pmf(x, eta: float) -> SelectionPmf:
    return _pmf(x, eta, -1.0)


def sample_selection(x, eta: float, rng: np.random.Generator, size=None):
    """Draw column indices from :func:`selection_pmf` by inverse CDF."""
    pmf = selection_pmf(x, eta)
    idx = sample_indices(pmf.probs / math.fsum(pmf.probs), rng, size)
    return int(idx) if size is None else idx


def stability_log_ratio(x, i: int, row_new, eta: float) -> float:
    """``max_t |ln P[S(x)=t] - ln P[S(x with row i replaced)=t]|``.

    Bounded by ``eta`` for every input.
    """
    x = _as_matrix(x)
    row_new = np.asarray(row_new, dtype=np.float64)
    if row_new.shape != (x.m,) or not np.all((row_new >= 0.0) & (row_new <= 1.0)):
        raise DomainError(f"replacement row must be {x.m} values in [0, 1]")
    a = selection_pmf(x, eta).log_probs
    b = selection_pmf(x.replace_row(i, row_new), eta).log_probs
    return float(np.max(np.abs(a - b)))


def _expected_from_sums(col_sums: np.ndarray, eta: float, sign: float = 1.0) -> np.ndarray:
    logp, _ = log_weights_from_sums(col_sums, eta, sign)
    return np.sum(np.exp(logp) * col_sums, axis=-1)


def expected_selected_sum(x, eta: float) -> float:
    """Exact ``E[sum_i x_i^{S(x)}]`` over the selection's randomness."""
    x = _as_matrix(x)
    return float(_expected_from_sums(x.column_sums(), _check_eta(eta)))


def accuracy_gap(x, eta: float) -> tuple[float, float]:
    """``(max_t s_t - E[selected sum], 2 ln(m) / eta)``."""
    x = _as_matrix(x)
    eta = _check_eta(eta)
    sums = x.column_sums()
    gap = float(np.max(sums)) - float(_expected_from_sums(sums, eta))
    return max(gap, 0.0), 2.0 * math.log(x.m) / eta


def min_accuracy_gap(x, eta: float) -> tuple[float, float]:
    """``(E[min-selected sum] - min_t s_t, 2 ln(m) / eta)``."""
    x = _as_matrix(x)
    eta = _check_eta(eta)
    sums = x.column_sums()
    gap = float(_expected_from_sums(sums, eta, -1.0)) - float(np.min(sums))
    return max(gap, 0.0), 2.0 * math.log(x.m) / eta


def selection_entropy(p: SelectionPmf) -> float:
    """Shannon entropy in nats; underflowed (zero) probabilities contribute 0."""
    mask = p.probs > 0
    return float(-np.sum(p.probs[mask] * p.log_probs[mask]))


# -- row-swap (hybrid) property -------------------------------------------


@dataclass(frozen=True)
class HybridResult:
    lhs: float
    rhs: float
    ci: tuple[float, float] | None
    exact: bool

    @property
    def holds(self) -> bool:
        upper = self.lhs if self.ci is None else self.ci[1]
        return upper <= self.rhs


def enumeration_size(dists: Sequence[BoundedDist], m: int) -> int:
    return math.prod(len(d.support) ** m for d in dists)


def hybrid_exact(dists: Sequence[BoundedDist], m: int, eta: float, chunk: int = 1 << 16) -> HybridResult:
    """``E[sum_i X_i^{S(X)}]`` by enumerating every matrix with i.i.d. columns.

    Row ``i`` has entries drawn from ``dists[i]``; all ``n*m`` entries are
    independent.  Refuses inputs with more than 2**20 matrices.
    """
    eta = _check_eta(eta)
    n = len(dists)
    total = enumeration_size(dists, m)
    if total > ENUMERATION_LIMIT:
        raise DomainError(f"{total} matrices exceed the enumeration limit {ENUMERATION_LIMIT}")
    supports = [d.support for d in dists]
    vals = [d.values[s] for d, s in zip(dists, supports)]
    logw = [np.log(d.weights[s]) for d, s in zip(dists, supports)]
    # entry (i, t) in row-major order, radix = support size of row i
    radices = np.array([len(supports[i]) for i in range(n) for _ in range(m)], dtype=np.int64)
    strides = np.concatenate(([1], np.cumprod(radices[:-1])))
    acc = []
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // strides[None, :]) % radices[None, :]
        digits = digits.reshape(len(idx), n, m)
        x = np.empty(digits.shape)
        logp = np.zeros(len(idx))
        for i in range(n):
            x[:, i, :] = vals[i][digits[:, i, :]]
            logp += logw[i][digits[:, i, :]].sum(axis=1)
        acc.append(np.exp(logp) * _expected_from_sums(x.sum(axis=1), eta))
    lhs = math.fsum(np.concatenate(acc))
    mu = math.fsum(d.mean for d in dists)
    return HybridResult(lhs, math.exp(eta) * mu, None, True)


def sample_matrices(dists: Sequence[BoundedDist], m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent matrices of shape ``(n, m)``; rows follow ``dists``."""
    out = np.empty((count, len(dists), m))
    for i, d in enumerate(dists):
        out[:, i, :] = sample_indices(d.weights, rng, (count, m)) / d.denominator
    return out


def hybrid_check(
    dists: Sequence[BoundedDist],
    m: int,
    eta: float,
    trials: int,
    rng: np.random.Generator,
    confidence: float = 0.99,
    chunk: int = 1 << 14,
) -> HybridResult:
    """Monte Carlo estimate of ``E[sum_i X_i^{S(X)}]`` against ``e^eta mu``."""
    eta = _check_eta(eta)
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rm = RunningMean()
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        x = sample_matrices(dists, m, k, rng)
        rm.update(_expected_from_sums(x.sum(axis=1), eta))
        done += k
    ci = rm.interval(confidence) if trials > 1 else (rm.mean, rm.mean)
    mu = math.fsum(d.mean for d in dists)
    return HybridResult(rm.mean, math.exp(eta) * mu, ci, False)


# -- main lemma -------------------------------------------------------------


@dataclass(frozen=True)
class LemmaMainResult:
    lhs: float
    rhs: float
    mean: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def lemma_main_check(col_sum_dist: SumDist, m: int, eta: float) -> LemmaMainResult:
    """Exact ``E[max_t S^t]`` for i.i.d. columns against ``e^eta mu + 2 ln(m)/eta``."""
    eta = _check_eta(eta)
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    lhs = expected_max_sum(col_sum_dist, int(m))
    mu = col_sum_dist.mean
    return LemmaMainResult(lhs, math.exp(eta) * mu + 2.0 * math.log(m) / eta, mu)


@dataclass(frozen=True)
class RowLaw:
    """Joint law of one row: integer grid vectors (numerators over ``denominator``) and probabilities."""

    denominator: int
    vectors: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]


def shared_randomness_rows(n: int, m: int, p: float, share: float) -> list[RowLaw]:
    """Rows whose entries are Bernoulli(p) but dependent across columns.

    With probability ``share`` a row copies one Bernoulli(p) draw into every
    column; otherwise its entries are independent.  Rows are independent of
    each other, columns are not.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= share <= 1.0):
        raise DomainError("p and share must lie in [0, 1]")
    vecs, probs = [], []
    for v in itertools.product((0, 1), repeat=m):
        ones = sum(v)
        pr = (1.0 - share) * p**ones * (1.0 - p) ** (m - ones)
        if ones == m:
            pr += share * p
        if ones == 0:
            pr += share * (1.0 - p)
        if pr > 0:
            vecs.append(v)
            probs.append(pr)
    law = RowLaw(1, tuple(vecs), tuple(probs))
    return [law] * n


def column_sum_law(rows: Sequence[RowLaw]) -> dict[tuple[int, ...], float]:
    """Exact joint law of the column-sum vector (grid numerators) for independent rows."""
    D = rows[0].denominator
    if any(r.denominator != D for r in rows):
        raise DomainError("row laws must share a denominator")
    m = len(rows[0].vectors[0])
    state: dict[tuple[int, ...], float] = {(0,) * m: 1.0}
    for r in rows:
        nxt: dict[tuple[int, ...], float] = defaultdict(float)
        for s, ps in state.items():
            for v, pv in zip(r.vectors, r.probs):
                nxt[tuple(a + b for a, b in zip(s, v))] += ps * pv
        state = dict(nxt)
    return state


def lemma_main_check_rows(rows: Sequence[RowLaw], eta: float) -> LemmaMainResult:
    """Main-lemma check for arbitrary independent rows (columns may be dependent).

    Compares exact ``E[max_t S^t]`` with ``e^eta max_t E[S^t] + 2 ln(m)/eta``.
    """
    eta = _check_eta(eta)
    law = column_sum_law(rows)
    D = rows[0].denominator
    m = len(next(iter(law)))
    lhs = math.fsum(p * max(s) for s, p in law.items()) / D
    col_means = [math.fsum(p * s[t] for s, p in law.items()) / D for t in range(m)]
    mu = max(col_means)
    return LemmaMainResult(lhs, math.exp(eta) * mu + 2.0 * math.log(m) / eta, mu)
