import argparse
import logging
import sys

from pydantic import ValidationError

from shared.config import settings
from shared.errors import SolverError
from shared.schemas import RunSpec


def configure_logging(debug: bool = False) -> None:
    logging.basicConfig(
        level="DEBUG" if debug else settings.effective_log_level,
        format="%(name)s - %(levelname)s - %(message)s",
        force=True,
    )


logger = logging.getLogger("main")


def parse_levels(text: str):
    """'A..B' or a single level 'A'"""
    try:
        if ".." in text:
            first, last = text.split("..", 1)
            return int(first), int(last)
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"Levels must look like A..B, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Adaptive interior penalty dG solver for u_t + lap^2 u = f on the unit square"
    )
    parser.add_argument("--debug", action="store_true", default=settings.debug, help="verbose logging")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="run a uniform or adaptive study")
    solve.add_argument("--example", choices=["u1", "u2"], default="u1")
    solve.add_argument("--degree", type=int, choices=[2, 3], default=settings.degree)
    solve.add_argument("--mode", choices=["uniform", "adaptive-implicit", "adaptive-explicit"], default="uniform")
    solve.add_argument("--levels", type=parse_levels, default=(1, 4), help="refinement levels A..B")
    solve.add_argument("--dt-law", choices=["h3", "h2"], default="h3", help="uniform time step (max h)^3 or ^2")
    solve.add_argument("--sigma0", type=float, default=None, help="value-jump penalty (default depends on --degree)")
    solve.add_argument("--xi0", type=float, default=None, help="gradient-jump penalty (default depends on --degree)")
    solve.add_argument("--norm", choices=["linf-l2", "l2-l2"], default="linf-l2")
    solve.add_argument("--tol-time", type=float, default=float("inf"))
    solve.add_argument("--tol-time-min", type=float, default=0.0)
    solve.add_argument("--tol-space", type=float, default=float("inf"))
    solve.add_argument("--tol-coarse", type=float, default=0.0)
    solve.add_argument("--lambda0", type=float, default=None)
    solve.add_argument("--T", dest="final_time", type=float, default=settings.final_time)
    solve.add_argument("--eta-tilde", choices=["per-step", "common-coarsening"], default=None)
    solve.add_argument("--compare-uniform", action="store_true",
                       help="pair an adaptive run with uniform runs at matched error")
    solve.add_argument("--max-dofs", type=int, default=settings.max_dofs)
    solve.add_argument("--out", default=settings.output_dir)

    verify = commands.add_parser("verify", help="run the test suite and the acceptance studies")
    verify.add_argument("--quick", action="store_true", help="only the test suite")
    return parser


def run_solve(args) -> int:
    from bench.reports import emit_study
    from bench.studies import run_study

    spec = RunSpec(
        example=args.example,
        degree=args.degree,
        mode=args.mode,
        levels=args.levels,
        dt_law=args.dt_law,
        sigma0=args.sigma0,
        xi0=args.xi0,
        norm=args.norm,
        tol_time=args.tol_time,
        tol_time_min=args.tol_time_min,
        tol_space=args.tol_space,
        tol_coarse=args.tol_coarse,
        lambda0=args.lambda0,
        final_time=args.final_time,
        eta_tilde=args.eta_tilde,
        compare_uniform=args.compare_uniform,
        max_dofs=args.max_dofs,
        out=args.out,
    )
    result = run_study(spec)
    paths = emit_study(result, spec)
    print(result.table.to_string(index=False))
    for path in paths.values():
        print(f"wrote {path}")
    return 0


def run_verify(args) -> int:
    from bench.acceptance import results_frame, verify

    results = verify(quick=args.quick)
    print(results_frame(results).to_string(index=False))
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.debug)
    try:
        if args.command == "solve":
            return run_solve(args)
        return run_verify(args)
    except (SolverError, ValueError, ValidationError) as e:
        logger.error(f"[main] {type(e).__name__}: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
