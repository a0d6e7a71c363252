"""Experiment orchestration: parameter grids, per-cell checks, reports.

A run expands an :class:`ExperimentConfig` into grid cells (the cartesian
product of the named parameter lists), evaluates every cell, and collects the
results into an :class:`ExperimentReport`.  Each cell draws randomness from its
own stream keyed by ``(seed, kind, params)``, so results do not depend on
thread count or execution order.

Verdicts:
    holds          inequality satisfied (within 1e-9 for exact checks, by the
                   confidence interval for Monte Carlo checks)
    vacuous        satisfied, but the probability bound is >= 1
    violated       inequality fails beyond tolerance / interval
    informational  a boundary case the inequality does not cover
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from . import __version__, bounds
from .dist import bernoulli, binomial_sum, tail_ge, tail_le, uniform_grid
from .errors import ConfigError, DomainError
from .exactmax import lemma_maxtb_check, proxy_vs_bound
from .mcdiarmid import make_function, mcdiarmid_check, sens_max_check
from .stable import (
    SampleMatrix,
    accuracy_gap,
    enumeration_size,
    hybrid_check,
    hybrid_exact,
    lemma_main_check,
    lemma_main_check_rows,
    min_accuracy_gap,
    selection_entropy,
    selection_pmf,
    shared_randomness_rows,
    stability_log_ratio,
)
from .stats import MIN_EXPECTATION_TRIALS, binomial_ci  # noqa: F401  (re-exported)
from .streams import make_stream

EXACT_SLACK = 1e-9
HYBRID_SLACK = 1e-10
VERDICTS = ("holds", "vacuous", "violated", "informational")
CSV_HEADER = ("kind", "index", "params", "lhs", "rhs", "ci_low", "ci_high", "verdict", "values", "wall_time_s")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    grid: dict[str, list]
    seed: int = 0
    format: str = "json"
    confidence: float = 0.99

    def cells(self) -> list[dict[str, Any]]:
        keys = list(self.grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.grid[k] for k in keys))]


@dataclass
class Cell:
    kind: str
    params: dict[str, Any]
    values: dict[str, Any]
    verdict: str
    ci: tuple[float, float] | None
    wall_time_s: float = 0.0

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "params": {"kind": self.kind, **self.params},
            "values": self.values,
            "verdict": self.verdict,
            "ci": None if self.ci is None else [self.ci[0], self.ci[1]],
        }
        if timing:
            d["wall_time_s"] = self.wall_time_s
        return d


@dataclass
class ExperimentReport:
    seed: int
    cells: list[Cell] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    confidence: float = 0.99

    @property
    def violations(self) -> int:
        return sum(c.verdict == "violated" for c in self.cells)

    def counts(self) -> dict[str, int]:
        return {v: sum(c.verdict == v for c in self.cells) for v in VERDICTS}

    def meta(self, timing: bool = True) -> dict:
        kinds = list(dict.fromkeys(c.kind for c in self.cells))
        m = {
            "seed": self.seed,
            "version": __version__,
            "kinds": kinds,
            "confidence": self.confidence,
            "total_cells": len(self.cells),
            "violations": self.violations,
            "verdict_counts": self.counts(),
        }
        if self.summary:
            m["summary"] = self.summary
        if timing:
            m["wall_time_s"] = self.wall_time_s
        return m

    def to_dict(self, timing: bool = True) -> dict:
        return {"meta": self.meta(timing), "cells": [c.to_dict(timing) for c in self.cells]}

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, allow_nan=False) + "\n"

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i, c in enumerate(self.cells):
            ci = c.ci or (None, None)
            w.writerow([
                c.kind, i, _kv(c.params), _fmt(c.values.get("lhs")), _fmt(c.values.get("rhs")),
                _fmt(ci[0]), _fmt(ci[1]), c.verdict, _kv(c.values), _fmt(c.wall_time_s) if timing else "",
            ])
        return buf.getvalue()

    def render(self, fmt: str, timing: bool = True) -> str:
        if fmt == "json":
            return self.to_json(timing)
        if fmt == "csv":
            return self.to_csv(timing)
        raise ConfigError(f"unknown output format {fmt!r}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _kv(d: dict) -> str:
    return ";".join(f"{k}={_fmt(v)}" for k, v in d.items())


def merge_reports(reports: list[ExperimentReport]) -> ExperimentReport:
    out = ExperimentReport(reports[0].seed, confidence=reports[0].confidence)
    for r in reports:
        out.cells.extend(r.cells)
        out.wall_time_s += r.wall_time_s
        out.summary.update(r.summary)
    return out


def strip_timing(report: dict) -> dict:
    """Copy of a JSON report dict without its wall-time fields."""
    r = json.loads(json.dumps(report))
    r["meta"].pop("wall_time_s", None)
    for c in r["cells"]:
        c.pop("wall_time_s", None)
    return r


# -- verdict helpers ----------------------------------------------------------


def _exact_verdict(lhs: float, rhs: float, probability: bool, slack: float = EXACT_SLACK) -> str:
    if lhs > rhs + slack:
        return "violated"
    return "vacuous" if probability and rhs >= 1.0 else "holds"


# -- cell evaluators ------------------------------------------------------------
# Each takes (params, rng, confidence) and returns (values, verdict, ci).


def _fuzz_corpus(n: int, m: int, count: int, rng: np.random.Generator):
    """(x, i, row_new) triples mixing continuous, binary and extreme-swap instances."""
    for j in range(count):
        mode = j % 3
        if mode == 0:
            x = rng.random((n, m))
            new = rng.random(m)
        elif mode == 1:
            x = rng.integers(0, 2, size=(n, m)).astype(float)
            new = rng.integers(0, 2, size=m).astype(float)
        else:
            # row i favours every column but one; the replacement flips it
            x = rng.integers(0, 2, size=(n, m)).astype(float)
            t = int(rng.integers(0, m))
            x[0] = 1.0
            x[0, t] = 0.0
            new = 1.0 - x[0]
        i = 0 if mode == 2 else int(rng.integers(0, n))
        yield SampleMatrix(x), i, new


def _eval_stability(p, rng, conf):
    n, m, eta, count = int(p["n"]), int(p["m"]), float(p["eta"]), int(p["instances"])
    worst = max(stability_log_ratio(x, i, new, eta) for x, i, new in _fuzz_corpus(n, m, count, rng))
    vals = {"lhs": worst, "rhs": eta, "ratio_over_eta": worst / eta, "instances": count}
    return vals, _exact_verdict(worst, eta, False), None


def _eval_accuracy(p, rng, conf):
    n, m, eta, count = int(p["n"]), int(p["m"]), float(p["eta"]), int(p["instances"])
    gap_excess = ent_excess = min_excess = -math.inf
    worst_gap = 0.0
    for x, _, _ in _fuzz_corpus(n, m, count, rng):
        gap, budget = accuracy_gap(x, eta)
        if gap - budget > gap_excess:
            gap_excess, worst_gap = gap - budget, gap
        mg, mb = min_accuracy_gap(x, eta)
        min_excess = max(min_excess, mg - mb)
        ent_excess = max(ent_excess, selection_entropy(selection_pmf(x, eta)) - math.log(m))
    budget = 2.0 * math.log(m) / eta
    vals = {
        "lhs": worst_gap, "rhs": budget, "gap_excess": gap_excess,
        "min_gap_excess": min_excess, "entropy_excess": ent_excess, "instances": count,
    }
    ok = gap_excess <= EXACT_SLACK and min_excess <= EXACT_SLACK and ent_excess <= 1e-12
    return vals, "holds" if ok else "violated", None


def _eval_hybrid(p, rng, conf):
    n, m, prob, eta = int(p["n"]), int(p["m"]), float(p["p"]), float(p["eta"])
    dists = [bernoulli(prob)] * n
    if enumeration_size(dists, m) <= 2**20:
        r = hybrid_exact(dists, m, eta)
        return {"lhs": r.lhs, "rhs": r.rhs, "exact": True}, _exact_verdict(r.lhs, r.rhs, False, HYBRID_SLACK), None
    r = hybrid_check(dists, m, eta, int(p["trials"]), rng, conf)
    return {"lhs": r.lhs, "rhs": r.rhs, "exact": False}, "holds" if r.holds else "violated", r.ci


def _eval_lemma_main(p, rng, conf):
    r = lemma_main_check(binomial_sum(int(p["n"]), float(p["p"])), int(p["m"]), float(p["eta"]))
    return {"lhs": r.lhs, "rhs": r.rhs, "mean": r.mean}, _exact_verdict(r.lhs, r.rhs, False), None


@lru_cache(maxsize=128)
def _dependent_lhs(n, m, prob, share):
    # lhs and column means do not depend on eta; only the rhs is rebuilt per cell
    r = lemma_main_check_rows(shared_randomness_rows(n, m, prob, share), 1.0)
    return r.lhs, r.mean


def _eval_lemma_main_dependent(p, rng, conf):
    m, eta = int(p["m"]), float(p["eta"])
    lhs, mean = _dependent_lhs(int(p["n"]), m, float(p["p"]), float(p["share"]))
    rhs = math.exp(eta) * mean + 2.0 * math.log(m) / eta
    return {"lhs": lhs, "rhs": rhs, "mean": mean}, _exact_verdict(lhs, rhs, False), None


def _eval_proxy(p, rng, conf):
    r = proxy_vs_bound(binomial_sum(int(p["n"]), float(p["p"])), int(p["m"]))
    vals = {"lhs": r.exact_proxy, "rhs": r.closed_form, "trivial_regime": r.trivial_regime}
    return vals, _exact_verdict(r.exact_proxy, r.closed_form, False), None


def _eval_maxtb(p, rng, conf):
    r = lemma_maxtb_check(binomial_sum(int(p["n"]), float(p["p"])), int(p["m"]))
    vals = {"lhs": r.tail_at_threshold, "rhs": r.maxtb_budget, "proxy": r.proxy, "threshold": r.threshold}
    if r.degenerate:
        return vals, "informational", None
    return vals, _exact_verdict(r.tail_at_threshold, r.maxtb_budget, True), None


def _eval_tail(p, rng, conf):
    n, eps = int(p["n"]), float(p["eps"])
    s = binomial_sum(n, float(p["p"]))
    b = bounds.additive_tail(n, eps, float(p.get("denominator", 64.0)))
    lhs = tail_ge(s, s.mean + eps * n)
    return {"lhs": lhs, "rhs": b.value}, _exact_verdict(lhs, b.value, True), None


def _eval_multiplicative(p, rng, conf):
    eps = float(p["eps"])
    s = binomial_sum(int(p["n"]), float(p["p"]))
    full, simple = bounds.multiplicative_upper(s.mean, eps)
    lhs = tail_ge(s, (1.0 + eps) * s.mean)
    vals = {"lhs": lhs, "rhs": full.value}
    verdict = _exact_verdict(lhs, full.value, True)
    if simple is not None:
        vals["rhs_simplified"] = simple.value
        vals["dominance_holds"] = full.value <= simple.value * (1 + 1e-12)
        if lhs > simple.value + EXACT_SLACK or not vals["dominance_holds"]:
            verdict = "violated"
    return vals, verdict, None


def _eval_lower(p, rng, conf):
    eps = float(p["eps"])
    s = binomial_sum(int(p["n"]), float(p["p"]))
    b = bounds.multiplicative_lower(s.mean, eps)
    lhs = tail_le(s, (1.0 - eps) * s.mean)
    return {"lhs": lhs, "rhs": b.value}, _exact_verdict(lhs, b.value, True), None


def _function_and_inputs(p):
    n, D = int(p["n"]), int(p.get("D", 4))
    dom = tuple(k / D for k in range(D + 1))
    return make_function(str(p["f"]), n, dom), [uniform_grid(D)] * n


def _eval_sens_max(p, rng, conf):
    f, dists = _function_and_inputs(p)
    m = int(p["m"])
    r = sens_max_check(f, dists, m, int(p["trials"]), rng, conf)
    vals = {"lhs": r.estimate, "rhs": r.bound, "mean_f": r.mean_f, "delta": f.declared_delta}
    if r.informational:
        return vals, "informational", r.ci
    return vals, "holds" if r.holds else "violated", r.ci


_tail_cache: dict[tuple, list] = {}


def _eval_mcdiarmid(p, rng, conf):
    # Cells differing only in eps get the same stream (see stream_exclude), so
    # one sample of f serves the whole eps grid; the cache is keyed on the
    # stream's initial state.
    f, dists = _function_and_inputs(p)
    eps_grid = KINDS["mcdiarmid"].default_grid["eps"]
    if float(p["eps"]) not in eps_grid:
        eps_grid = [*eps_grid, float(p["eps"])]
    key = (json.dumps(rng.bit_generator.state, sort_keys=True, default=str), conf, tuple(eps_grid))
    if key not in _tail_cache:
        results = mcdiarmid_check(f, dists, eps_grid, int(p["trials"]), rng, conf)
        _tail_cache[key] = results
        while len(_tail_cache) > 64:
            _tail_cache.pop(next(iter(_tail_cache)))
    r = next(t for t in _tail_cache[key] if t.eps == float(p["eps"]))
    vals = {"lhs": r.tail, "rhs": r.bound.value, "threshold": r.threshold, "hits": r.hits, "delta": f.declared_delta}
    if not r.holds:
        return vals, "violated", r.ci
    return vals, "vacuous" if r.bound.vacuous else "holds", r.ci


@dataclass(frozen=True)
class Kind:
    evaluate: Callable
    required: tuple[str, ...]
    stream_key: str
    default_grid: dict
    expectation_mc: bool = False
    stream_exclude: tuple[str, ...] = ()


_EPS_20 = [k / 20 for k in range(21)]
_FUZZ_GRID = {"n": [1, 2, 8, 64], "m": [1, 2, 8, 32], "eta": [0.01, 0.1, 1.0, 5.0, 10.0], "instances": [13]}
_BINOM_GRID = {"n": [4, 16, 64, 256], "m": [2, 16, 256, 4096], "p": [0.1, 0.5, 0.9]}
_TAIL_GRID = {"n": [16, 64, 256, 1024], "p": [0.1, 0.3, 0.5, 0.7, 0.9]}

KINDS: dict[str, Kind] = {
    "stability": Kind(_eval_stability, ("n", "m", "eta", "instances"), "fuzz", _FUZZ_GRID),
    "accuracy": Kind(_eval_accuracy, ("n", "m", "eta", "instances"), "fuzz", _FUZZ_GRID),
    "hybrid": Kind(
        _eval_hybrid, ("n", "m", "p", "eta", "trials"), "hybrid",
        {"n": [1, 2, 3, 4, 5], "m": [1, 2, 3, 4], "p": [0.1, 0.5, 0.9], "eta": [0.01, 0.1, 1.0, 5.0], "trials": [10_000]},
        expectation_mc=True,
    ),
    "lemma-main": Kind(
        _eval_lemma_main, ("n", "m", "p", "eta"), "lemma-main",
        {**_BINOM_GRID, "eta": [float(x) for x in np.logspace(-2, 1, 20)]},
    ),
    "lemma-main-dependent": Kind(
        _eval_lemma_main_dependent, ("n", "m", "p", "share", "eta"), "lemma-main-dependent",
        {"n": [2, 4, 6], "m": [2, 3, 4], "p": [0.1, 0.5, 0.9], "share": [0.5, 1.0], "eta": [0.1, 1.0, 10.0]},
    ),
    "proxy": Kind(_eval_proxy, ("n", "m", "p"), "proxy", _BINOM_GRID),
    "maxtb": Kind(_eval_maxtb, ("n", "m", "p"), "maxtb", {**_BINOM_GRID, "p": [0.0, 0.1, 0.5, 0.9]}),
    "tail": Kind(_eval_tail, ("n", "p", "eps"), "tail", {**_TAIL_GRID, "eps": _EPS_20}),
    "multiplicative": Kind(
        _eval_multiplicative, ("n", "p", "eps"), "multiplicative", {**_TAIL_GRID, "eps": _EPS_20 + [2.0, 4.0, 10.0]}
    ),
    "lower": Kind(_eval_lower, ("n", "p", "eps"), "lower", {**_TAIL_GRID, "eps": _EPS_20}),
    "sens-max": Kind(
        _eval_sens_max, ("f", "n", "m", "trials"), "sens-max",
        {"f": ["sum", "max", "range", "quadratic"], "n": [16, 64], "m": [16, 256], "trials": [10_000], "D": [4]},
        expectation_mc=True,
    ),
    "mcdiarmid": Kind(
        _eval_mcdiarmid, ("f", "n", "eps", "trials"), "mcdiarmid",
        {
            "f": ["sum", "max", "range", "quadratic"], "n": [16, 64],
            "eps": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 0.75, 1.0], "trials": [10_000], "D": [4],
        },
        stream_exclude=("eps",),
    ),
}

SUITES: dict[str, tuple[str, ...]] = {
    "stability": ("stability",),
    "accuracy": ("accuracy",),
    "hybrid": ("hybrid",),
    "lemma-main": ("lemma-main", "lemma-main-dependent"),
    "proxy": ("proxy",),
    "maxtb": ("maxtb",),
    "tail": ("tail",),
    "multiplicative": ("multiplicative",),
    "lower": ("lower",),
    "mcdiarmid": ("sens-max", "mcdiarmid"),
}
SUITES["all"] = tuple(k for s in SUITES.values() for k in s)


def validate(config: ExperimentConfig) -> None:
    if config.kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {config.kind!r}; choose from {sorted(KINDS)}")
    kind = KINDS[config.kind]
    if not isinstance(config.grid, dict) or not config.grid:
        raise ConfigError("parameter grid must be a non-empty mapping")
    for k, v in config.grid.items():
        if not isinstance(v, list) or len(v) == 0:
            raise ConfigError(f"grid entry {k!r} must be a non-empty list")
    missing = [k for k in kind.required if k not in config.grid]
    if missing:
        raise ConfigError(f"{config.kind}: grid is missing {missing}")
    if "trials" in config.grid:
        floor = MIN_EXPECTATION_TRIALS if kind.expectation_mc else 1
        if any(int(t) < floor for t in config.grid["trials"]):
            raise ConfigError(f"{config.kind}: trials must be >= {floor}")
    if not 0.0 < config.confidence < 1.0:
        raise ConfigError("confidence must lie in (0, 1)")
    if config.format not in ("json", "csv"):
        raise ConfigError(f"unknown output format {config.format!r}")


def _params_key(params: dict) -> str:
    return json.dumps(params, sort_keys=True)


def evaluate_cell(kind: str, params: dict, seed: int, confidence: float = 0.99) -> Cell:
    k = KINDS[kind]
    keyed = {name: v for name, v in params.items() if name not in k.stream_exclude}
    rng = make_stream(seed, k.stream_key, _params_key(keyed))
    t0 = time.perf_counter()
    try:
        values, verdict, ci = k.evaluate(params, rng, confidence)
    except DomainError as e:
        raise ConfigError(f"{kind} cell {params}: {e}") from e
    values = {key: (float(v) if isinstance(v, (np.floating, np.integer)) else v) for key, v in values.items()}
    ci = None if ci is None else (float(ci[0]), float(ci[1]))
    return Cell(kind, dict(params), values, verdict, ci, time.perf_counter() - t0)


def _summarise(config: ExperimentConfig, cells: list[Cell]) -> dict:
    if config.kind != "lemma-main" or len(config.grid.get("eta", [])) < 2:
        return {}
    groups: dict[str, tuple[float, float]] = {}
    for c in cells:
        key = ",".join(f"{k}={v}" for k, v in c.params.items() if k != "eta")
        best = groups.get(key)
        if best is None or c.values["rhs"] < best[1]:
            groups[key] = (float(c.params["eta"]), c.values["rhs"])
    return {"lemma-main eta_argmin_rhs": {k: v[0] for k, v in groups.items()}}


def run(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Evaluate every grid cell of ``config``; deterministic given the seed."""
    validate(config)
    params = config.cells()
    t0 = time.perf_counter()

    def work(p):
        return evaluate_cell(config.kind, p, config.seed, config.confidence)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(work, params))
    else:
        cells = [work(p) for p in params]
    report = ExperimentReport(config.seed, cells, confidence=config.confidence)
    report.summary = _summarise(config, cells)
    report.wall_time_s = time.perf_counter() - t0
    return report


def run_many(configs: list[ExperimentConfig], threads: int = 1) -> ExperimentReport:
    for c in configs:
        validate(c)
    return merge_reports([run(c, threads) for c in configs])


def suite_configs(suite: str, seed: int, overrides: dict | None = None, confidence: float = 0.99) -> list[ExperimentConfig]:
    """Default configs for a named suite; ``overrides`` maps kind -> partial grid."""
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    overrides = overrides or {}
    out = []
    for kind in SUITES[suite]:
        grid = {**KINDS[kind].default_grid, **overrides.get(kind, {})}
        out.append(ExperimentConfig(kind, grid, seed, confidence=confidence))
    return out


def config_from_dict(d: dict, seed: int | None = None, fmt: str | None = None) -> list[ExperimentConfig]:
    """Parse a JSON config: a single experiment or ``{"experiments": [...]}``."""
    items = d.get("experiments", [d]) if isinstance(d, dict) else None
    if not items or not isinstance(items, list):
        raise ConfigError("config must be an experiment object or {'experiments': [...]}")
    out = []
    for e in items:
        if not isinstance(e, dict) or "kind" not in e:
            raise ConfigError("every experiment needs a 'kind'")
        grid = e.get("grid", KINDS[e["kind"]].default_grid if e["kind"] in KINDS else {})
        out.append(ExperimentConfig(
            e["kind"], grid,
            int(seed if seed is not None else e.get("seed", 0)),
            fmt or e.get("format", "json"),
            float(e.get("confidence", 0.99)),
        ))
    for c in out:
        validate(c)
    return out
