"""Command-line experiment driver.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 a predictive
system broke its monotonicity/range contract.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import ContractViolation
from .datagen import DRIFT_MODES, ToyConfig, format_csv, gen_toy, write_csv
from .experiments import (
    BASES,
    TAU_MODES,
    HeatmapConfig,
    SemiOnlineConfig,
    run_demo_noniid,
    run_heatmap,
    run_prop1,
    run_semionline,
)
from .schemas import validate_report

log = logging.getLogger("confcal")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CONTRACT = 0, 1, 2, 3


class _ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-lo", type=float, default=-5.0)
    p.add_argument("--grid-hi", type=float, default=5.0)
    p.add_argument("--grid-points", type=int, default=1001)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="confcal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write a toy dataset as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slope", type=float, default=2.0)
    p.add_argument("--drift", choices=DRIFT_MODES, default="iid-uniform")
    p.add_argument("--out", required=True, help="output CSV path ('-' for stdout)")

    p = sub.add_parser("heatmap", help="CRPS of raw vs calibrated Nadaraya-Watson over (g, h)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=2000, help="size of the training sequence proper")
    p.add_argument("--n-calib", type=int, default=1000)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--g", type=float, nargs="+", default=None, help="object bandwidths (default: 8 log-spaced in [0.01, 1])")
    p.add_argument("--h", type=float, nargs="+", default=None, help="label bandwidths (default: 8 log-spaced in [0.01, 1])")
    _add_grid(p)
    p.add_argument("--tau-mode", choices=TAU_MODES, default="random")
    p.add_argument("--folds", type=int, default=None, help="also report a cross-conformal column with this many folds")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")

    p = sub.add_parser("prop1", help="ideal conformal output vs the PIT empirical CDF")
    p.add_argument("--n", type=int, nargs="+", default=[10, 100, 1000])
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-points", type=int, default=1024)
    p.add_argument("--out", default="-")

    p = sub.add_parser("semionline", help="semi-online PITs and their Kolmogorov test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=1000)
    p.add_argument("--n-calib", type=int, default=1000)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--drift", choices=DRIFT_MODES, default="iid-uniform")
    p.add_argument("--base", choices=sorted(BASES), default="nw")
    p.add_argument("--g", type=float, default=0.1)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--level", type=float, default=0.01)
    p.add_argument("--replications", type=int, default=1, help="run seeds seed..seed+R-1")
    p.add_argument("--out", default="-")

    p = sub.add_parser("demo-noniid", help="conformalizing a u**2-miscalibrated oracle")
    p.add_argument("--n-calib", type=int, nargs="+", default=[0, 10, 100, 1000])
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drift", choices=DRIFT_MODES, default="deterministic-drift")
    p.add_argument("--tau-mode", choices=TAU_MODES, default="random")
    _add_grid(p)
    p.add_argument("--out", default="-")
    return parser


def _run(args) -> dict | None:
    if args.command == "gen":
        data = gen_toy(ToyConfig(args.n, args.seed, args.slope, args.drift))
        if args.out == "-":
            sys.stdout.write(format_csv(data))
        else:
            write_csv(data, args.out)
        return None
    if args.command == "heatmap":
        kw = {}
        if args.g is not None:
            kw["g_values"] = args.g
        if args.h is not None:
            kw["h_values"] = args.h
        cfg = HeatmapConfig(
            n_train_proper=args.n_train, n_calib=args.n_calib, n_test=args.n_test, seed=args.seed,
            grid_lo=args.grid_lo, grid_hi=args.grid_hi, grid_points=args.grid_points,
            tau_mode=args.tau_mode, folds=args.folds, **kw,
        )
        return run_heatmap(cfg, jobs=args.jobs)
    if args.command == "prop1":
        return run_prop1(args.n, args.replications, args.seed, t_points=args.t_points)
    if args.command == "semionline":
        cfg = SemiOnlineConfig(args.n_train, args.n_calib, args.n_test, args.seed, args.drift,
                               args.base, args.g, args.h, args.level)
        return run_semionline(cfg, replications=args.replications)
    if args.command == "demo-noniid":
        return run_demo_noniid(args.n_calib, args.n_test, args.seed, args.drift, args.tau_mode,
                               args.grid_lo, args.grid_hi, args.grid_points)
    raise _ConfigError(f"unknown command {args.command}")


def _emit(report: dict, out: str) -> None:
    validate_report(report)
    text = json.dumps(report, indent=2) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _fail(code: int, message: str) -> int:
    print(f"confcal: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already printed
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        report = _run(args)
        if report is not None:
            for w in report["warnings"]:
                log.warning(w)
            _emit(report, args.out)
    except ContractViolation as exc:
        return _fail(EXIT_CONTRACT, f"contract violation: {exc}")
    except (ValueError, _ConfigError) as exc:
        return _fail(EXIT_CONFIG, f"invalid configuration: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, f"I/O error: {exc}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
