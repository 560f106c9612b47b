"""
Command-Line Entry Point for Sparse Recovery
Generates instances, solves them with trace output, runs phase-transition
sweeps and writes penalty/prox shape curves
"""

import argparse
import csv
import json
import logging
import os
import sys
from datetime import datetime

import numpy as np

from config import Config
from errors import (
    FactorizationError,
    InvalidInputError,
    InvalidParameterError,
    LambdaSelectionError,
    SolverDivergenceError,
)
from experiments import ProblemInstance, generate_instance, relative_error, run_sweep
from penalties import penalty_curves, prox_curves
from solvers import Algorithm, IterationTrace, SolverConfig, run_solver

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 2, 3


def configure_logging(verbose):
    """Configure root logging once: log file plus stderr"""
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=[logging.FileHandler(Config.LOG_FILE), logging.StreamHandler(sys.stderr)],
    )


def ensure_output_dir(path):
    """Create output directory if it doesn't exist"""
    if path and not os.path.exists(path):
        os.makedirs(path)
        logger.info(f"Created output directory: {path}")


def write_json(path, data):
    ensure_output_dir(os.path.dirname(path))
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
    logger.info(f"Saved {path}")


def write_csv(path, header, rows):
    ensure_output_dir(os.path.dirname(path))
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    logger.info(f"Saved {path}")


def write_manifest(path, subcommand, arguments, outputs):
    """Record the fully resolved invocation next to its outputs"""
    write_json(
        path,
        {
            "artifact_version": Config.ARTIFACT_VERSION,
            "subcommand": subcommand,
            "created_at": datetime.now().isoformat(),
            "arguments": arguments,
            "outputs": outputs,
        },
    )


def parse_list(text, cast):
    try:
        return [cast(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise InvalidInputError(f"cannot parse list '{text}': {e}") from e


def solver_config_from_args(args, algorithm=None):
    return SolverConfig(
        algorithm=Algorithm.parse(algorithm or args.algo),
        rho_mode=args.rho_mode,
        rho=args.rho,
        gamma=args.gamma,
        lambda_mode=args.lambda_mode,
        lam=args.lam,
        max_iter=args.max_iter,
        tol=args.tol,
    )


def resolved_arguments(args):
    """Namespace as a JSON-ready dict, without replay-only fields"""
    data = dict(vars(args))
    for key in ("handler", "manifest"):
        data.pop(key, None)
    return data


def cmd_gen(args):
    problem = generate_instance(args.n, args.m, args.tau, args.sigma, args.seed)
    out = args.out or os.path.join(
        Config.OUTPUT_DIR, f"instance_n{args.n}_m{args.m}_tau{args.tau}_seed{args.seed}.json"
    )
    write_json(out, problem.to_document())
    write_manifest(
        os.path.splitext(out)[0] + "_manifest.json",
        "gen",
        resolved_arguments(args),
        {"instance": out},
    )
    print(f"✓ Instance written to {out}")
    return EXIT_OK


def load_problem(args):
    if args.instance:
        with open(args.instance) as f:
            return ProblemInstance.from_document(json.load(f))
    return generate_instance(args.n, args.m, args.tau, args.sigma, args.seed)


def cmd_solve(args):
    problem = load_problem(args)
    config = solver_config_from_args(args)
    out_dir = args.out or Config.OUTPUT_DIR
    trace_path = os.path.join(out_dir, "solve_trace.csv")
    solution_path = os.path.join(out_dir, "solve_solution.json")
    write_manifest(
        os.path.join(out_dir, "solve_manifest.json"),
        "solve",
        {**resolved_arguments(args), "solver": config.to_dict()},
        {"trace": trace_path, "solution": solution_path},
    )

    try:
        solution = run_solver(problem, config)
    except SolverDivergenceError as e:
        write_csv(trace_path, IterationTrace.COLUMNS, (e.trace or IterationTrace()).rows())
        print(f"✗ Solver diverged: {e}")
        return EXIT_DIVERGED

    write_csv(trace_path, IterationTrace.COLUMNS, solution.trace.rows())
    rel_err = relative_error(problem.x0, solution.x_hat) if problem.x0 is not None else None
    write_json(
        solution_path,
        {
            "algorithm": config.algorithm.value,
            "converged": solution.converged,
            "iterations": solution.iterations,
            "final_lambda": solution.final_lambda,
            "rho": solution.rho,
            "rel_err": rel_err,
            "x_hat": np.asarray(solution.x_hat).tolist(),
        },
    )

    print(f"converged: {solution.converged}")
    print(f"iterations: {solution.iterations}")
    if rel_err is not None:
        print(f"rel_err: {rel_err!r}")
    if config.algorithm.uses_mcp:
        print(f"lambda: {solution.final_lambda!r}")
    if config.algorithm.is_admm:
        print(f"max_multiplier_residual: {solution.max_multiplier_residual!r}")
        print(f"prox_descent_violations: {solution.prox_descent_violations}")
    return EXIT_OK


def cmd_sweep(args):
    m_list = parse_list(args.m_list, int)
    algorithms = parse_list(args.algos, str)
    sigmas = parse_list(args.sigmas, float) if args.sigmas else [args.sigma]
    base = solver_config_from_args(args, algorithm=algorithms[0])

    records = []
    for sigma in sigmas:
        records.extend(
            run_sweep(
                args.n,
                args.tau,
                sigma,
                m_list,
                args.trials,
                base,
                algorithms=algorithms,
                base_seed=args.seed,
                threads=args.threads,
            )
        )

    out_dir = args.out or Config.OUTPUT_DIR
    sweep_path = os.path.join(out_dir, "sweep.csv")
    columns = records[0].COLUMNS if records else ()
    write_csv(sweep_path, columns, ([r.as_dict()[c] for c in columns] for r in records))
    write_manifest(
        os.path.join(out_dir, "sweep_manifest.json"),
        "sweep",
        {**resolved_arguments(args), "solver": base.to_dict()},
        {"sweep": sweep_path},
    )
    for r in records:
        print(f"sigma={r.sigma:g} M={r.m} {r.algorithm}: success_rate={r.success_rate!r}")
    return EXIT_OK


def cmd_curves(args):
    out_dir = args.out or Config.OUTPUT_DIR
    u_grid = np.linspace(-args.extent, args.extent, args.points)
    penalties = penalty_curves(u_grid, lam=args.lam)
    proxes = prox_curves(u_grid, lam=args.lam, gamma=args.gamma)
    for name, columns in (("penalty_curves.csv", penalties), ("prox_curves.csv", proxes)):
        header = list(columns)
        rows = zip(*(columns[h].tolist() for h in header))
        write_csv(os.path.join(out_dir, name), header, rows)
    print(f"✓ Curves written to {out_dir}")
    return EXIT_OK


def add_instance_flags(parser):
    parser.add_argument("--n", type=int, default=512, help="signal length N")
    parser.add_argument("--m", type=int, default=150, help="measurements M")
    parser.add_argument("--tau", type=int, default=15, help="sparsity")
    parser.add_argument("--sigma", type=float, default=0.001, help="noise std")
    parser.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed")


def add_solver_flags(parser):
    parser.add_argument("--algo", default="admm-mcp", help="algorithm tag")
    parser.add_argument("--rho-mode", default="explicit", choices=["paper", "theory", "explicit"])
    parser.add_argument(
        "--rho", type=float, default=Config.RHO_DEFAULT, help="rho for explicit mode"
    )
    parser.add_argument("--gamma", type=float, default=Config.GAMMA)
    parser.add_argument(
        "--lambda-mode", default="adaptive", choices=["fixed", "grid", "adaptive"]
    )
    parser.add_argument("--lam", type=float, default=None, help="lambda for fixed mode")
    parser.add_argument("--max-iter", type=int, default=Config.MAX_ITER)
    parser.add_argument("--tol", type=float, default=Config.TOL)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparse-recovery",
        description="ADMM-MCP sparse signal recovery and benchmarks",
    )
    parser.add_argument("--verbose", type=int, default=Config.VERBOSE_LEVEL)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("gen", help="generate a problem instance")
    add_instance_flags(gen)
    gen.add_argument("--out", default=None, help="instance JSON path")
    gen.set_defaults(handler=cmd_gen)

    solve = sub.add_parser("solve", help="solve one instance and write its trace")
    add_instance_flags(solve)
    solve.add_argument("--instance", default=None, help="instance JSON path")
    add_solver_flags(solve)
    solve.add_argument("--out", default=None, help="output directory")
    solve.add_argument("--manifest", default=None, help="replay a solve manifest")
    solve.set_defaults(handler=cmd_solve)

    sweep = sub.add_parser("sweep", help="phase-transition sweep")
    add_instance_flags(sweep)
    sweep.add_argument("--sigmas", default=None, help="comma list of noise levels")
    sweep.add_argument("--m-list", default="60,90,120,150")
    sweep.add_argument("--trials", type=int, default=100)
    sweep.add_argument("--algos", default="admm-mcp")
    sweep.add_argument("--threads", type=int, default=Config.THREADS)
    add_solver_flags(sweep)
    sweep.add_argument("--out", default=None, help="output directory")
    sweep.add_argument("--manifest", default=None, help="replay a sweep manifest")
    sweep.set_defaults(handler=cmd_sweep)

    curves = sub.add_parser("curves", help="penalty and prox shape curves")
    curves.add_argument("--lam", type=float, default=1.0)
    curves.add_argument("--gamma", type=float, default=Config.GAMMA)
    curves.add_argument("--extent", type=float, default=4.0)
    curves.add_argument("--points", type=int, default=801)
    curves.add_argument("--out", default=None, help="output directory")
    curves.set_defaults(handler=cmd_curves)
    return parser


def replay_manifest(args):
    """Replace parsed flags with the arguments recorded in a manifest"""
    with open(args.manifest) as f:
        manifest = json.load(f)
    if manifest.get("subcommand") != args.subcommand:
        raise InvalidInputError(
            f"manifest is for '{manifest.get('subcommand')}', not '{args.subcommand}'"
        )
    recorded = dict(manifest["arguments"])
    recorded.pop("solver", None)
    if args.out is not None:
        recorded["out"] = args.out
    return argparse.Namespace(**recorded, handler=args.handler, manifest=None)


def main(argv=None):
    """Main entry point"""
    # parser defaults read Config, so it must be sound first
    try:
        Config.validate()
    except ValueError as e:
        print(f"✗ Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE

    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        if getattr(args, "manifest", None):
            args = replay_manifest(args)
        return args.handler(args)
    except (InvalidInputError, InvalidParameterError) as e:
        print(f"✗ Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FactorizationError, LambdaSelectionError) as e:
        print(f"✗ Error: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as e:
        logger.error(f"I/O failure: {e}", exc_info=True)
        print(f"✗ Error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
