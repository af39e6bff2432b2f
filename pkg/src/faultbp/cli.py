"""Command-line interface: solve one instance, run sweeps, theory curves,
and instance generation.

Errors print one machine-readable JSON line to stderr and exit nonzero.
"""

import argparse
import csv
import json
import sys

import numpy as np

from .discrete import maxprod_solve, sumprod_solve
from .experiments import PIPELINES, SWEEP_PARAMS, SweepConfig, run_sweep, write_csv
from .heuristics import local_search, naive_round, threshold_round
from .model import (
    GeneratorConfig,
    load_instance,
    log_loss,
    sample_instance,
    save_instance,
    to_pairwise,
)
from .oracle import exhaustive_map
from .solver import NbpSolver, SolverConfig
from .theory import bernoulli_mmse, eta_fixed_point, map_test_error


def _parse_values(text: str):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _parse_nu(text: str):
    if text == "auto":
        return None
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("--nu must be positive or 'auto'")
    return value


def _add_solver_flags(parser):
    parser.add_argument("--bins", type=int, default=1024, help="quantization bins")
    parser.add_argument("--max-iters", type=int, default=50)
    parser.add_argument("--tol", type=float, default=1e-5)
    parser.add_argument("--nu", type=_parse_nu, default=None, metavar="auto|FLOAT",
                        help="prior relaxation variance (default: auto = (4*spacing)^2)")
    parser.add_argument("--damping", type=float, default=0.0)


def _build_parser():
    parser = argparse.ArgumentParser(prog="faultbp",
                                     description="Fault identification solvers and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance file")
    p_solve.add_argument("--instance", required=True)
    p_solve.add_argument("--algo", choices=("nbp", "maxprod", "sumprod", "oracle"),
                         default="nbp")
    p_solve.add_argument("--pipeline", choices=PIPELINES, default="round+local")
    p_solve.add_argument("--trace", default=None,
                         help="write per-iteration JSON lines here (nbp only)")
    _add_solver_flags(p_solve)

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo sweep over a parameter grid")
    p_sweep.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p_sweep.add_argument("--values", type=_parse_values, required=True,
                         help="comma- or space-separated grid values")
    p_sweep.add_argument("--m", type=int, default=100)
    p_sweep.add_argument("--n", type=int, default=200)
    p_sweep.add_argument("--p", type=float, default=0.12)
    p_sweep.add_argument("--q", type=float, default=0.2)
    p_sweep.add_argument("--sigma", type=float, default=1.0)
    p_sweep.add_argument("--trials", type=int, default=1000)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--algos", default="nbp",
                         help="comma-separated subset of nbp,maxprod,sumprod,oracle")
    p_sweep.add_argument("--pipelines", default=",".join(PIPELINES))
    p_sweep.add_argument("--no-timing", action="store_true",
                         help="omit wall times so identical runs are byte-identical")
    p_sweep.add_argument("--progress", action="store_true")
    _add_solver_flags(p_sweep)

    p_theory = sub.add_parser("theory", help="scalar-channel limit curves")
    p_theory.add_argument("--p", type=float, required=True)
    p_theory.add_argument("--delta", type=float, required=True)
    p_theory.add_argument("--gamma-grid", type=_parse_values, required=True)
    p_theory.add_argument("--out", required=True)

    p_gen = sub.add_parser("gen", help="generate a random instance file")
    p_gen.add_argument("--m", type=int, default=100)
    p_gen.add_argument("--n", type=int, default=200)
    p_gen.add_argument("--p", type=float, default=0.12)
    p_gen.add_argument("--q", type=float, default=0.2)
    p_gen.add_argument("--sigma", type=float, default=1.0)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True)
    return parser


def _cmd_solve(args) -> int:
    model, y, x_true = load_instance(args.instance)
    config = SolverConfig(bins=args.bins, max_iters=args.max_iters, tol=args.tol,
                          relax_var=args.nu, damping=args.damping)
    iterations, converged = 1, True
    if args.algo == "nbp":
        trace_fh = open(args.trace, "w") if args.trace else None
        try:
            res = NbpSolver(model, y, config).run(trace=trace_fh)
        finally:
            if trace_fh:
                trace_fh.close()
        soft, iterations, converged = res.soft, res.iterations, res.converged
    elif args.algo in ("maxprod", "sumprod"):
        fn = maxprod_solve if args.algo == "maxprod" else sumprod_solve
        res = fn(to_pairwise(model, y), max_iters=args.max_iters, tol=args.tol,
                 damping=args.damping)
        soft, iterations, converged = res.soft, res.iterations, res.converged
    else:
        pattern, _ = exhaustive_map(model, y)
        soft = pattern.astype(float)

    if args.pipeline == "none":
        pattern = naive_round(soft)
    elif args.pipeline == "round":
        pattern = threshold_round(model, y, soft)
    else:
        pattern = local_search(model, y, threshold_round(model, y, soft))

    out = {
        "algorithm": args.algo,
        "pipeline": args.pipeline,
        "pattern": pattern.tolist(),
        "soft": [float(v) for v in soft],
        "loss": log_loss(model, y, pattern),
        "iterations": iterations,
        "converged": converged,
    }
    if x_true is not None:
        out["exact_match"] = bool(np.array_equal(pattern, x_true))
        out["bit_errors"] = int(np.sum(pattern != x_true))
    json.dump(out, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _cmd_sweep(args) -> int:
    config = SweepConfig(
        param=args.param, values=args.values, m=args.m, n=args.n, p=args.p,
        q=args.q, sigma=args.sigma, trials=args.trials, master_seed=args.seed,
        algorithms=tuple(args.algos.split(",")),
        pipelines=tuple(args.pipelines.split(",")),
        bins=args.bins, max_iters=args.max_iters, tol=args.tol,
        relax_var=args.nu, damping=args.damping,
    )
    progress = None
    if args.progress:
        def progress(point, trial):
            print(f"point {point + 1}/{len(config.values)} trial {trial + 1}/{config.trials}",
                  file=sys.stderr)
    result = run_sweep(config, progress=progress)
    write_csv(result.rows, args.out, include_timing=not args.no_timing)
    return 0


def _cmd_theory(args) -> int:
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "eta", "multiple_fixed_points",
                         "distortion_square", "distortion_hamming"])
        for gamma in args.gamma_grid:
            fp = eta_fixed_point(args.p, args.delta, gamma)
            snr = fp.eta * gamma
            writer.writerow([gamma, fp.eta, fp.multiple,
                             bernoulli_mmse(args.p, snr),
                             map_test_error(args.p, snr)])
    return 0


def _cmd_gen(args) -> int:
    config = GeneratorConfig(m=args.m, n=args.n, p=args.p, q=args.q, sigma=args.sigma)
    model, x_true, y = sample_instance(config, args.seed)
    save_instance(args.out, model, y, x_true)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"solve": _cmd_solve, "sweep": _cmd_sweep,
                "theory": _cmd_theory, "gen": _cmd_gen}
    try:
        return handlers[args.command](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
