"""``conclab`` command line.

Exit codes: 0 when every verdict holds (or is vacuous/informational), 1 when
any cell is violated, 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bounds, harness
from .errors import ConfigError, DomainError

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def _parse_number(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_params(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"malformed parameter {item!r}; expected key=value")
        try:
            out[key.strip()] = _parse_number(val)
        except ValueError:
            raise ConfigError(f"parameter {key!r} is not a number: {val!r}") from None
    return out


def _cmd_bound(args) -> int:
    if args.name not in bounds.FORMULAS:
        raise ConfigError(f"unknown formula {args.name!r}; choose from {', '.join(sorted(bounds.FORMULAS))}")
    params = parse_params(args.params)
    if "lambda" in params:
        params["lam"] = params.pop("lambda")
    try:
        b = bounds.FORMULAS[args.name](**params)
    except TypeError as e:
        raise ConfigError(f"bad parameters for {args.name}: {e}") from None
    if b is None:
        raise ConfigError(f"{args.name} is undefined for these parameters")
    shown = ", ".join(f"{k}={v}" for k, v in b.params.items())
    print(f"{b.name} value={b.value!r} vacuous={str(b.vacuous).lower()} ({shown})")
    return EXIT_OK


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from None


def _default_seed(args, file_cfg: dict | None) -> int:
    if args.seed is not None:
        return args.seed
    if file_cfg and "seed" in file_cfg:
        return int(file_cfg["seed"])
    env = os.environ.get("CONCLAB_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"CONCLAB_SEED must be an integer, got {env!r}") from None
    return 0


def _finish(report: harness.ExperimentReport, args) -> int:
    fmt = args.format or "json"
    if args.out:
        Path(args.out).write_text(report.render(fmt))
    counts_by_kind: dict[str, dict[str, int]] = {}
    for c in report.cells:
        counts_by_kind.setdefault(c.kind, dict.fromkeys(harness.VERDICTS, 0))[c.verdict] += 1
    for kind, counts in counts_by_kind.items():
        detail = " ".join(f"{v}={n}" for v, n in counts.items())
        print(f"{kind:<22} cells={sum(counts.values()):<5} {detail}")
    if args.command == "sweep":
        for key, val in report.summary.items():
            print(f"{key}: {json.dumps(val)}")
    status = "FAIL" if report.violations else "OK"
    print(f"{status}: {len(report.cells)} cells, {report.violations} violated, seed={report.seed}")
    return EXIT_VIOLATION if report.violations else EXIT_OK


def _cmd_verify(args) -> int:
    file_cfg = _load_config(args.config) if args.config else None
    seed = _default_seed(args, file_cfg)
    if file_cfg and ("kind" in file_cfg or "experiments" in file_cfg):
        configs = harness.config_from_dict(file_cfg, seed=seed, fmt=args.format)
        wanted = set(harness.SUITES.get(args.suite, ()))
        if args.suite not in harness.SUITES:
            raise ConfigError(f"unknown suite {args.suite!r}")
        configs = [c for c in configs if c.kind in wanted]
        if not configs:
            raise ConfigError(f"config defines no experiment belonging to suite {args.suite!r}")
    else:
        overrides = (file_cfg or {}).get("overrides", {})
        confidence = float((file_cfg or {}).get("confidence", 0.99))
        configs = harness.suite_configs(args.suite, seed, overrides, confidence)
    return _finish(harness.run_many(configs, args.threads), args)


def _cmd_sweep(args) -> int:
    file_cfg = _load_config(args.config)
    seed = _default_seed(args, file_cfg)
    configs = harness.config_from_dict(file_cfg, seed=seed, fmt=args.format)
    if args.format is None:
        args.format = configs[0].format
    return _finish(harness.run_many(configs, args.threads), args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conclab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    bound = sub.add_parser("bound", help="evaluate a closed-form bound")
    bsub = bound.add_subparsers(dest="action", required=True)
    ev = bsub.add_parser("eval", help="print a BoundValue")
    ev.add_argument("--name", required=True, help=f"one of: {', '.join(sorted(bounds.FORMULAS))}")
    ev.add_argument("--params", default="", help="comma-separated key=value pairs")
    ev.set_defaults(func=_cmd_bound)

    def run_flags(p):
        p.add_argument("--seed", type=int, default=None, help="overrides the config file and CONCLAB_SEED")
        p.add_argument("--out", default=None, help="write the machine-readable report here")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")

    verify = sub.add_parser("verify", help="run a verification suite")
    verify.add_argument("suite", help=f"one of: {', '.join(harness.SUITES)}")
    verify.add_argument("--config", default=None, help="JSON config file")
    run_flags(verify)
    verify.set_defaults(func=_cmd_verify)

    sweep = sub.add_parser("sweep", help="run a parameter sweep from a config file")
    sweep.add_argument("--config", required=True, help="JSON config file")
    run_flags(sweep)
    sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
