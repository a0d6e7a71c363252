"""Closed-form tail and proxy bounds.

Every function returns a :class:`BoundValue`.  Probability bounds are reported
verbatim, including values >= 1, and flagged ``vacuous`` in that case.

Instantiated constants
----------------------
* The MGF bound ``E[exp(lam (S - mu))] <= exp(lam^2 n / 8)`` uses Hoeffding's
  lemma for variables in [0, 1].  ``mgf_bound`` and ``proxy_from_mgf`` take the
  constant as ``rate`` so an alternative can be swapped in.
* The moment bound ``E[(S - mu)^(2k)] <= (c n k)^k`` has no canonical constant;
  ``c`` defaults to 2 and the moment route is only ever reported.
* The bounded-differences tail uses rate 1/256.  With a dummy column at the
  mean, the sensitivity max-bound gives
  ``E[max{0, Z^1..Z^m}] <= 8 Delta sqrt(n ln(m+1))`` for ``Z = f - E f``.
  Choosing ``m = floor(exp(eps^2 n / 256) - 1)`` makes
  ``16 Delta sqrt(n ln(m+1)) <= eps n Delta``, so the tail-from-proxy step
  gives ``P(Z >= eps n Delta) <= ln(2)/m <= (2 + ln 2) exp(-eps^2 n / 256)
  <= exp(1 - eps^2 n / 256)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .dist import BoundedDist
from .errors import DomainError

HOEFFDING_RATE = 1.0 / 8.0


@dataclass(frozen=True)
class BoundValue:
    name: str
    value: float
    params: dict = field(default_factory=dict)
    vacuous: bool = False


def _prob(name: str, value: float, **params) -> BoundValue:
    return BoundValue(name, value, params, vacuous=value >= 1.0)


def _nonneg(name: str, x: float) -> None:
    if not x >= 0 or not math.isfinite(x):
        raise DomainError(f"{name} must be finite and >= 0, got {x!r}")


def _count(name: str, x, minimum: int) -> None:
    if int(x) != x or x < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {x!r}")


def additive_tail(n: int, eps: float, denominator: float = 64.0) -> BoundValue:
    """``P(S - mu >= eps n) <= exp(1 - eps^2 n / 64)``."""
    _count("n", n, 1)
    _nonneg("eps", eps)
    if not denominator > 0:
        raise DomainError("denominator must be positive")
    return _prob("additive", math.exp(1.0 - eps * eps * n / denominator), n=n, eps=eps, denominator=denominator)


def proxy_bound(n: int, m: int) -> BoundValue:
    """``E[max{0, Y^1..Y^m}] <= 4 sqrt(n ln(m+1))``."""
    _count("n", n, 1)
    _count("m", m, 0)
    return BoundValue("proxy", 4.0 * math.sqrt(n * math.log1p(m)), {"n": n, "m": m})


def maxtb_budget(m: int) -> BoundValue:
    """``P(Y >= 2 E[max{0, Y^1..Y^m}]) <= ln(2)/m``."""
    _count("m", m, 1)
    return _prob("maxtb", math.log(2.0) / m, m=m)


def multiplicative_upper(mu: float, eps: float) -> tuple[BoundValue, BoundValue | None]:
    """Upper multiplicative tail ``P(S >= (1+eps) mu)``.

    Returns ``(e (1 + eps/4)^(-eps mu/8), exp(1 - eps^2 mu / 64))``; the
    second, simplified form is only valid for ``eps <= 10`` and is ``None``
    beyond that.
    """
    _nonneg("mu", mu)
    _nonneg("eps", eps)
    full = math.exp(1.0 - (eps * mu / 8.0) * math.log1p(eps / 4.0))
    first = _prob("multiplicative", full, mu=mu, eps=eps)
    if eps > 10:
        return first, None
    return first, _prob("multiplicative_simplified", math.exp(1.0 - eps * eps * mu / 64.0), mu=mu, eps=eps)


def multiplicative_lower(mu: float, eps: float) -> BoundValue:
    """``P(S <= (1-eps) mu) <= exp(1 - eps^2 mu / 32)`` for eps in [0, 1]."""
    _nonneg("mu", mu)
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"lower-tail bound needs eps in [0, 1], got {eps!r}")
    return _prob("lower", math.exp(1.0 - eps * eps * mu / 32.0), mu=mu, eps=eps)


def mgf_bound(n: int, lam: float, rate: float = HOEFFDING_RATE) -> BoundValue:
    """``E[exp(lam (S - mu))] <= exp(rate lam^2 n)``."""
    _count("n", n, 1)
    return BoundValue("mgf", math.exp(rate * lam * lam * n), {"n": n, "lambda": lam, "rate": rate})


def centered_mgf(d: BoundedDist, lam: float) -> float:
    """Exact ``E[exp(lam (X - E X))]`` of one bounded variable."""
    mu = d.mean
    return math.fsum(d.weights * np.exp(lam * (d.values - mu)))


def _log_proxy_from_mgf(n: int, m: int, lam: float, rate: float) -> float:
    # (1/lam) ln(1 + m exp(rate lam^2 n)), overflow-free
    if m == 0:
        return 0.0
    return float(np.logaddexp(0.0, math.log(m) + rate * lam * lam * n)) / lam


def proxy_from_mgf(n: int, m: int, lam: float, rate: float = HOEFFDING_RATE) -> BoundValue:
    """``(1/lam) ln(1 + m exp(lam^2 n / 8))`` as a bound on the max-proxy."""
    _count("n", n, 1)
    _count("m", m, 0)
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    return BoundValue("proxy_mgf", _log_proxy_from_mgf(n, m, lam, rate), {"n": n, "m": m, "lambda": lam, "rate": rate})


def optimal_proxy_from_mgf(n: int, m: int, rate: float = HOEFFDING_RATE) -> BoundValue:
    """``proxy_from_mgf`` minimised over lambda > 0 (bounded Brent search)."""
    _count("n", n, 1)
    _count("m", m, 1)
    guess = math.sqrt(math.log1p(m) / (rate * n))
    res = optimize.minimize_scalar(
        lambda lam: _log_proxy_from_mgf(n, m, lam, rate),
        bounds=(guess * 1e-3, guess * 10.0),
        method="bounded",
        options={"xatol": guess * 1e-10},
    )
    lam = float(res.x)
    return BoundValue("proxy_mgf_opt", _log_proxy_from_mgf(n, m, lam, rate), {"n": n, "m": m, "lambda": lam, "rate": rate})


def proxy_from_moments(n: int, m: int, k: int, c: float = 2.0) -> BoundValue:
    """``(m (c n k)^k)^(1/(2k))``, the moment route to the max-proxy."""
    _count("n", n, 1)
    _count("m", m, 1)
    _count("k", k, 1)
    log_val = (math.log(m) + k * math.log(c * n * k)) / (2 * k)
    return BoundValue("proxy_moments", math.exp(log_val), {"n": n, "m": m, "k": k, "c": c})


def best_proxy_from_moments(n: int, m: int, c: float = 2.0, k_max: int = 200) -> BoundValue:
    """``proxy_from_moments`` minimised over integer ``k <= k_max``."""
    return min((proxy_from_moments(n, m, k, c) for k in range(1, k_max + 1)), key=lambda b: b.value)


def sens_max_bound(n: int, m: int, delta: float) -> BoundValue:
    """``E[max_t (f(X^t) - E f)] <= 8 Delta sqrt(n ln m)``."""
    _count("n", n, 1)
    _count("m", m, 1)
    _nonneg("delta", delta)
    return BoundValue("sens_max", 8.0 * delta * math.sqrt(n * math.log(m)), {"n": n, "m": m, "delta": delta})


def mcdiarmid_tail(n: int, delta: float, eps: float) -> BoundValue:
    """``P(f - E f >= eps n Delta) <= exp(1 - eps^2 n / 256)``."""
    _count("n", n, 1)
    _nonneg("delta", delta)
    _nonneg("eps", eps)
    return _prob("mcdiarmid", math.exp(1.0 - eps * eps * n / 256.0), n=n, delta=delta, eps=eps)


FORMULAS = {
    "additive": additive_tail,
    "proxy": proxy_bound,
    "maxtb": maxtb_budget,
    "multiplicative": lambda mu, eps: multiplicative_upper(mu, eps)[0],
    "multiplicative-simplified": lambda mu, eps: multiplicative_upper(mu, eps)[1],
    "lower": multiplicative_lower,
    "mgf": lambda n, lam, rate=HOEFFDING_RATE: mgf_bound(n, lam, rate),
    "proxy-mgf": lambda n, m, lam, rate=HOEFFDING_RATE: proxy_from_mgf(n, m, lam, rate),
    "proxy-mgf-opt": optimal_proxy_from_mgf,
    "proxy-moments": proxy_from_moments,
    "sens-max": sens_max_bound,
    "mcdiarmid": mcdiarmid_tail,
}
