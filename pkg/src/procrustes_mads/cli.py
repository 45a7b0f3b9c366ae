"""Command-line entry point: ``procrustes-mads <subcommand> [options]``.

Exit codes: 0 on success, 1 when a numerical kernel fails, 2 for bad input
(unreadable or malformed files, invalid settings).
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Optional, Sequence

from . import experiments as ex
from .exceptions import ContractError, NumericalError

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2

# subcommand -> (experiment name, runner)
_RUNNERS = {
    "duck-outliers": ("duck_outliers", ex.run_duck_outliers),
    "duck-nullspace": ("duck_nullspace", ex.run_duck_nullspace),
    "angle-sweep": ("angle_sweep", ex.run_angle_sweep),
    "power-curve": ("power_curve", ex.run_power_curve),
}


def _floats(text: str) -> tuple:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text: str) -> tuple:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _common(p: argparse.ArgumentParser, *, norm_help: str):
    p.add_argument("--norm", choices=["frobenius", "spectral", "robust"], help=norm_help)
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--threads", type=int, help="worker processes for Monte Carlo replicates")
    p.add_argument("--out-dir", dest="out_dir", help="directory for CSV output")
    p.add_argument("--preset", choices=sorted(ex.PRESETS), help="named size preset")
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--n-starts", dest="n_starts", type=int, help="random starts per component for MADS solves")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procrustes-mads",
        description="Procrustes alignment under the Frobenius, spectral and robust norms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="align two matrices read from CSV files")
    p.add_argument("a_file", help="CSV with d rows and n columns (target A)")
    p.add_argument("b_file", help="CSV with d rows and n columns (to be rotated, B)")
    _common(p, norm_help="norm to minimize (default frobenius)")

    p = sub.add_parser("duck-outliers", help="duck alignment with two outlier points")
    _common(p, norm_help="restrict to one norm (default all)")

    p = sub.add_parser("duck-nullspace", help="duck alignment with null-space perturbations")
    _common(p, norm_help="restrict to one norm (default all)")
    p.add_argument("--n-seeds", dest="n_seeds", type=int, help="noisy replicates of the Dtilde set")
    p.add_argument("--grid-points", dest="grid_points", type=int, help="angles in the cost sweep")

    p = sub.add_parser("angle-sweep", help="alignment cost over all planar rotations")
    _common(p, norm_help="restrict to one norm (default all)")
    p.add_argument("--variant", choices=list(ex.SWEEP_VARIANTS), help="point set aligned to the duck")
    p.add_argument("--grid-points", dest="grid_points", type=int, help="angles in the sweep")

    p = sub.add_parser("power-curve", help="bootstrap power of the two-graph tests")
    _common(p, norm_help="unused; all five statistics are reported")
    p.add_argument("--n", type=int, help="vertices per graph")
    p.add_argument("--r", type=int, help="SBM blocks")
    p.add_argument("--d", type=int, help="embedding dimension (default r)")
    p.add_argument("--n-boot", dest="n_boot", type=int, help="bootstrap pairs per critical value and per strength")
    p.add_argument("--n-mc", dest="n_mc", type=int, help="Monte Carlo replicates")
    p.add_argument("--alpha", type=float, help="test level")
    p.add_argument("--t-grid", dest="t_grid", type=_floats, help="comma-separated strengths in [0, 1]")
    p.add_argument("--alternatives", type=_names,
                   help="comma-separated subset of diffuse, rank_one, salt_pepper")
    p.add_argument("--theta", type=float, help="rank-one angle to span(X), radians")
    return parser


_NOT_SETTINGS = {"command", "config", "preset", "a_file", "b_file"}


def _config_from_args(experiment: str, args: argparse.Namespace) -> ex.ExperimentConfig:
    file_values = ex.load_config_file(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_SETTINGS}
    return ex.build_config(experiment, args.preset, file_values, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            config = _config_from_args("solve", args)
            sys.stdout.write(ex.format_solution(ex.run_solve(config, args.a_file, args.b_file)))
            return EXIT_OK
        experiment, runner = _RUNNERS[args.command]
        config = _config_from_args(experiment, args)
        if config.out_dir is None:
            config = dataclasses.replace(config, out_dir=".")
        tables = runner(config)
        for name in sorted(tables):
            print(f"wrote {config.out_dir}/{name}")
        return EXIT_OK
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
