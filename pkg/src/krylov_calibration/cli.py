"""Command line entry point.

Example::

    krylov-calibrate calibrate --matrix gen:rand-spd:200 --solver krylov-full \
        --m 10,50 --ntest 100 --seed 42 --out results
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, MatrixMarketError, NotPSDError, SkipBudgetExceeded
from .experiment.report import write_report
from .experiment.runner import ExperimentConfig, default_out_dir, run_experiment
from .solvers.variants import SolverVariant

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SKIPPED = 3


def _checkpoints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(
        prog="krylov-calibrate",
        description="Calibration tests for Bayesian conjugate gradient solvers.")
    sub = parser.add_subparsers(dest="command", required=True)
    cal = sub.add_parser("calibrate", help="run Z- and S-statistic experiments")
    cal.add_argument("--matrix", required=True,
                     help="MatrixMarket file or gen:<name>:<n>[:<kappa>[:<seed>]]")
    cal.add_argument("--solver", required=True, choices=[v.value for v in SolverVariant])
    cal.add_argument("--m", type=_checkpoints, default=(10, 100, 300),
                     help="iteration checkpoints, e.g. 10,100,300")
    cal.add_argument("--ntest", type=int, default=100, help="number of test problems")
    cal.add_argument("--seed", type=int, default=42)
    cal.add_argument("--approx-rank", type=int, default=50,
                     help="rank of the approximate Krylov posterior")
    cal.add_argument("--eps", type=float, default=1e-12, help="Lanczos breakdown tolerance")
    scale = cal.add_mutually_exclusive_group()
    scale.add_argument("--jacobi", dest="jacobi", action="store_true", default=None,
                       help="apply symmetric Jacobi scaling (default for files)")
    scale.add_argument("--no-jacobi", dest="jacobi", action="store_false")
    cal.add_argument("--out", default=None, help="output directory")
    cal.add_argument("--svg", action="store_true", help="also write SVG histograms")
    cal.add_argument("--threads", type=int, default=None,
                     help="worker threads (default: KRYLOV_CALIBRATE_THREADS or CPU count)")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    config = ExperimentConfig(
        matrix=args.matrix, solver=args.solver, checkpoints=args.m, n_test=args.ntest,
        seed=args.seed, approx_rank=args.approx_rank, eps=args.eps, jacobi=args.jacobi,
        out_dir=args.out, svg=args.svg, workers=args.threads)
    out = default_out_dir(config)
    try:
        report = run_experiment(config)
    except (ConfigError, MatrixMarketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotPSDError as exc:
        print(f"error: {config.matrix}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SkipBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        for i, reason in exc.report.skipped:
            print(f"  problem {i}: {reason}", file=sys.stderr)
        return EXIT_SKIPPED
    try:
        write_report(report, out, svg=config.svg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(report.summary())
    for i, reason in report.skipped:
        print(f"  skipped problem {i}: {reason}")
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
