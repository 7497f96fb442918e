"""Command-line entry point: ``rodlangevin run | kernel-table | selftest``.

Exit codes: 0 all checks pass, 1 an oracle check failed, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from .core import CLASSICAL, QUANTUM, ParameterError
from .experiment import ConfigError, default_output_dir, emit_kernel_table, load_config, run_experiment

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rodlangevin", description="Brownian rod simulator with analytic oracles")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config and check it against the oracles")
    run.add_argument("config", type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--trajectories", type=int)
    run.add_argument("--out", type=Path, help="output directory (default: $RODLANGEVIN_OUT or ./rodlangevin-out)")
    run.add_argument("--mode", choices=(CLASSICAL, QUANTUM), help="override the bath regime")
    run.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")

    kernel = sub.add_parser("kernel-table", help="tabulate the quantum noise kernel C(tau)")
    kernel.add_argument("config", type=Path)
    kernel.add_argument("--tau-max", type=float, required=True)
    kernel.add_argument("--points", type=int, required=True)
    kernel.add_argument("--symmetric", action="store_true", help="tabulate on [-tau_max, tau_max]")
    kernel.add_argument("--out", type=Path, help="CSV file (default: stdout)")

    selftest = sub.add_parser("selftest", help="run the acceptance suite")
    selftest.add_argument("--criteria", type=int, nargs="+", choices=range(1, 9), metavar="N")
    return parser


def _load(args):
    cfg = load_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "trajectories", None) is not None:
        if args.trajectories < 0:
            raise ConfigError("--trajectories must be non-negative", field="n_trajectories")
        overrides["n_trajectories"] = args.trajectories
    if getattr(args, "mode", None) is not None:
        try:
            overrides["bath"] = dataclasses.replace(cfg.bath, regime=args.mode)
        except ParameterError as exc:
            raise ConfigError(str(exc), field=getattr(exc, "field", "regime")) from exc
    return cfg.replace(**overrides) if overrides else cfg


def _run(args) -> int:
    cfg = _load(args)
    out = args.out or (Path(cfg.output_dir) if cfg.output_dir else default_output_dir())
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1", field="jobs")
    results = run_experiment(cfg, out, args.jobs)
    for i, result in enumerate(results):
        prefix = f"point {i}: " if len(results) > 1 else ""
        for report in result.reports:
            print(prefix + report.line())
    ok = all(r.passed for r in results)
    print(f"{'PASS' if ok else 'FAIL'} -> {out}")
    return EXIT_PASS if ok else EXIT_FAIL


def _kernel_table(args) -> int:
    cfg = _load(args)
    if args.points < 2 or args.tau_max <= 0:
        raise ConfigError("need --points >= 2 and --tau-max > 0")
    if cfg.bath.cutoff is None:
        raise ConfigError("kernel table needs a cutoff frequency", field="cutoff")
    lo = -args.tau_max if args.symmetric else 0.0
    grid = np.linspace(lo, args.tau_max, args.points)
    table = emit_kernel_table(cfg.bath, grid, args.out)
    if args.out is None:
        print("tau,C")
        for t, c in table.tolist():
            print(f"{t!r},{c!r}")
    return EXIT_PASS


def _selftest(args) -> int:
    from .acceptance import run_all

    ok = run_all(args.criteria)
    print("selftest", "PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_FAIL


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    handler = {"run": _run, "kernel-table": _kernel_table, "selftest": _selftest}[args.command]
    try:
        return handler(args)
    except (ConfigError, ParameterError, OSError) as exc:
        where = f" [{exc.field}]" if getattr(exc, "field", None) else ""
        line = f" (line {exc.line})" if getattr(exc, "line", None) else ""
        print(f"rodlangevin: error{where}{line}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
