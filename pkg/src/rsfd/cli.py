"""Command-line entry point: ``rsfd run | validate | oracle``.

Exit codes: 0 success, 1 configuration or usage error, 2 experiment failure.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .benchmarks import SchemeId, solve_odl
from .channel import RNG_ALGORITHM, generate_channels, mrt_precoders
from .config import SystemConfig, format_config, load_config
from .distortion import build_coefficients
from .harness import DEFAULT_GRIDS, ExperimentError, ExperimentSpec, canonical_axis, emit_csv, format_csv, run_experiment
from .oracles import grid_search, water_filling
from .solver import SolverError, sia_solve
from .validation import ConfigError

__all__ = ["main", "ENV_SEED", "ENV_OUTPUT_DIR"]

ENV_SEED = "RSFD_SEED"
ENV_OUTPUT_DIR = "RSFD_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_EXPERIMENT = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _parser():
    parser = _Parser(prog="rsfd", description="Distortion-aware full-duplex relay power allocation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep and write a CSV summary")
    run.add_argument("config", nargs="?", help="config file (defaults to the built-in setup)")
    run.add_argument("--sweep", required=True, help="noise, strength_sd, distortion or power")
    run.add_argument("--values", help="comma-separated axis values (dB except for power)")
    run.add_argument("--out", help="output CSV path; '-' for stdout")
    run.add_argument("--seed", type=int, help=f"base seed (default ${ENV_SEED} or 0)")
    run.add_argument("--realizations", type=int, default=100)
    run.add_argument("--schemes", default=",".join(s.value for s in SchemeId))
    run.add_argument("--jobs", type=int, default=1, help="worker processes")

    validate = sub.add_parser("validate", help="check a config file and print it normalized")
    validate.add_argument("config", nargs="?")

    oracle = sub.add_parser("oracle", help="cross-check the solver against grid search and water-filling")
    oracle.add_argument("--seeds", type=int, default=3)
    oracle.add_argument("--points", type=int, default=200)
    return parser


def _load(path):
    return SystemConfig() if path is None else load_config(path)


def _base_seed(arg):
    if arg is not None:
        return arg
    raw = os.environ.get(ENV_SEED)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_SEED} must be an integer, got {raw!r}") from None


def _output_path(arg, axis):
    if arg is not None:
        return None if arg == "-" else Path(arg)
    directory = os.environ.get(ENV_OUTPUT_DIR)
    if directory is None:
        return None
    return Path(directory) / f"sweep_{axis}.csv"


def _cmd_run(args):
    config = _load(args.config)
    axis = canonical_axis(args.sweep)
    values = DEFAULT_GRIDS[axis]
    if args.values:
        try:
            values = [float(v) for v in args.values.split(",")]
        except ValueError:
            raise ConfigError(f"--values: cannot parse {args.values!r}") from None
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    spec = ExperimentSpec(
        config=config,
        axis=axis,
        values=values,
        num_realizations=args.realizations,
        schemes=[s.strip().upper() for s in args.schemes.split(",") if s.strip()],
        base_seed=_base_seed(args.seed),
    )
    try:
        result = run_experiment(spec, jobs=args.jobs)
    except ExperimentError as exc:
        print(f"rsfd: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT
    path = _output_path(args.out, axis)
    if path is None:
        sys.stdout.write(format_csv(result))
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        emit_csv(result, path)
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args):
    config = _load(args.config)
    sys.stdout.write(f"# rng = {RNG_ALGORITHM}\n")
    sys.stdout.write(format_config(config))
    return EXIT_OK


def _cmd_oracle(args):
    ok = True
    for K, tol in ((1, 1e-3), (2, 1e-2)):
        config = SystemConfig(num_subcarriers=K, noise_var_relay=1e-2, noise_var_dest=1e-2).without_impairments()
        for seed in range(args.seeds):
            channels = generate_channels(config, seed)
            coeffs = build_coefficients(channels, mrt_precoders(channels), config)
            _, trace = sia_solve(coeffs, config)
            grid = grid_search(coeffs, config, args.points).value
            gap = abs(trace.final_objective - grid)
            passed = gap <= tol
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'} grid K={K} seed={seed} gap={gap:.3g} (tol {tol:g})")
    config = SystemConfig().without_impairments()
    for seed in range(args.seeds):
        channels = generate_channels(config, seed)
        coeffs = build_coefficients(channels, mrt_precoders(channels), config)
        allocation, _ = solve_odl(coeffs, config)
        reference = water_filling(coeffs.gain_sd / coeffs.alpha_d, config.power_source)
        err = float(np.max(np.abs(allocation.p_sd - reference)))
        passed = err <= 1e-6
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} water-filling seed={seed} max power error={err:.3g}")
    return EXIT_OK if ok else EXIT_EXPERIMENT


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    handler = {"run": _cmd_run, "validate": _cmd_validate, "oracle": _cmd_oracle}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"rsfd: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"rsfd: solver failure: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT


if __name__ == "__main__":
    sys.exit(main())
