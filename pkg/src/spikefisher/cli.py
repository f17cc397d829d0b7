"""Command-line entry point.

Exit codes: 0 success, 1 verification failed, 2 usage error, 3 invalid
configuration, 4 degenerate experiment (too many failed replications),
5 output could not be written.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

from .config import config_from_dict, config_to_dict, load_config
from .errors import ConfigError, ExperimentDegenerateError, SpikeFisherError
from .limitlaw import classical_limit, solve_theta, wachter_stieltjes, wachter_support
from .montecarlo import run_experiment
from .report import ReportIOError, RunManifest, write_summary
from .validation import SUITES, paper_config, run_suite

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO = 0, 1, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _grid(text: str) -> list[float]:
    """``"5,8,10"`` or ``"start:stop:count"``."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            count_i = int(count)
            if count_i < 1:
                raise ValueError
            step = (float(stop) - float(start)) / max(count_i - 1, 1)
            return [float(start) + k * step for k in range(count_i)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use 'z1,z2,...' or 'start:stop:count'") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spikefisher", description="Spiked Fisher matrix eigenvalue toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    lsd = sub.add_parser("lsd", help="Wachter support and Stieltjes transform values")
    lsd.add_argument("--c", type=float, required=True, help="p/T")
    lsd.add_argument("--y", type=float, required=True, help="p/n, in (0, 1)")
    lsd.add_argument("--z", type=_grid, help="evaluation points right of the support")

    theta = sub.add_parser("theta", help="centering parameter for one spike")
    theta.add_argument("--lambda", dest="lam", type=float, required=True)
    theta.add_argument("--c", type=float, required=True, help="bulk ratio (p-q)/T")
    theta.add_argument("--y", type=float, required=True, help="bulk ratio (p-q)/n")
    theta.add_argument("--digits", type=int, default=3, help="decimals for theta and the fixed-q limit")

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    sim.add_argument("--config", required=True, type=Path)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", type=Path, default=Path("results"))
    sim.add_argument("--threads", type=int, help="worker threads (default: $SFL_THREADS or 1)")

    ver = sub.add_parser("verify", help="run acceptance suites")
    ver.add_argument("--suite", choices=sorted(SUITES), default="all")
    ver.add_argument("--quick", action="store_true", help="reduced replication counts, widened statistical tolerances")

    fig = sub.add_parser("paper-figure", help="qq data for the largest and smallest spike of the simulation design")
    fig.add_argument("--out", type=Path, default=Path("paper_figure"))
    fig.add_argument("--reps", type=int, default=1000)
    fig.add_argument("--seed", type=int, default=1)
    fig.add_argument("--threads", type=int)
    return parser


def _cmd_lsd(args: argparse.Namespace) -> int:
    a, b = wachter_support(args.c, args.y)
    print("a,b")
    print(f"{a:.4f},{b:.4f}")
    if args.z:
        print("z,S(z)")
        for z in args.z:
            print(f"{z:.6g},{wachter_stieltjes(z, args.c, args.y):.10g}")
    return EXIT_OK


def _cmd_theta(args: argparse.Namespace) -> int:
    sol = solve_theta(args.lam, args.c, args.y)
    try:
        limit = f"{classical_limit(args.lam, args.c, args.y):.{args.digits}f}"
    except SpikeFisherError:
        limit = "nan"
    print("lambda,theta,residual,classical_limit")
    print(f"{args.lam:g},{sol.theta:.{args.digits}f},{sol.residual:.3e},{limit}")
    return EXIT_OK


def _run_and_write(config, out: Path, threads: int | None) -> int:
    manifest = RunManifest(config)
    out.mkdir(parents=True, exist_ok=True)
    manifest.write(out)
    start = time.perf_counter()
    summary = run_experiment(config, threads=threads)
    manifest.duration_seconds = round(time.perf_counter() - start, 3)
    manifest.status = "complete"
    paths = write_summary(summary, manifest, out)
    for path in paths:
        print(path)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.reps is not None or args.seed is not None:
        data = config_to_dict(config)
        if args.reps is not None:
            data["replications"] = args.reps
        if args.seed is not None:
            data["seed"] = args.seed
        config = config_from_dict(data)
    return _run_and_write(config, args.out, args.threads)


def _cmd_verify(args: argparse.Namespace) -> int:
    results = run_suite(args.suite, quick=args.quick, echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY_FAILED


def _cmd_paper_figure(args: argparse.Namespace) -> int:
    try:
        config = paper_config("gaussian", args.reps, seed=args.seed)
    except SpikeFisherError as exc:
        raise ConfigError("reps" if "replications" in str(exc) else "seed", str(exc)) from exc
    return _run_and_write(config, args.out, args.threads)


_COMMANDS = {
    "lsd": _cmd_lsd,
    "theta": _cmd_theta,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "paper-figure": _cmd_paper_figure,
}


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentDegenerateError as exc:
        print(f"experiment degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ReportIOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SpikeFisherError as exc:
        # domain errors from lsd/theta arguments are bad input
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(cli_main())
