"""Command-line front end.

Exit codes: 0 success / convergence, 1 invalid input or numeric failure,
2 iteration budget exhausted (or the boundary variant stalled) without
meeting the tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import apps
from .core import LearningFunction, RunConfig
from .errors import GeoProjError
from .geometry import Connection
from .io import dump_problem, load_problem, read_matrix, trace_to_csv, write_matrix
from .oracle import make_interior_problem, oracle_grid, oracle_k2, pythagorean_residuals
from .stability import recommended_beta, stability_reports
from .variants import ALGORITHMS, VariantConfig, run, run_boundary, run_gradient

EXIT_OK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.17g}"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_project(args) -> int:
    problem = load_problem(args.problem)
    if args.echo:
        sys.stdout.write(dump_problem(problem))
        return EXIT_OK
    config = VariantConfig(
        tol_gamma=args.tol,
        max_iters=args.max_iters,
        learning=LearningFunction(args.beta) if args.beta is not None else None,
        record_trace=True,
        inner_L=args.inner_L,
    )
    if args.algorithm == "grad" and args.lam is not None:
        w, trace = run_gradient(problem, config, lam=args.lam)
    elif args.algorithm == "boundary":
        w, trace = run_boundary(problem, config, epsilon=args.epsilon)
    else:
        w, trace = run(problem, args.algorithm, config)
    if args.trace:
        Path(args.trace).write_text(trace_to_csv(trace))
    summary = {
        "algorithm": args.algorithm,
        "termination": trace.reason,
        "iterations": trace.iterations,
        "w": [float(x) for x in w],
        "divergence": trace.final.divergence,
        "max_abs_gamma": trace.final.max_abs_gamma,
    }
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    return EXIT_OK if trace.converged else EXIT_BUDGET


def _oracle_for(problem, resolution):
    if problem.K == 2:
        return oracle_k2(problem)
    return oracle_grid(problem, resolution)


def cmd_bounds(args) -> int:
    problem = load_problem(args.problem)
    sol = _oracle_for(problem, args.resolution)
    reports = stability_reports(problem.basis, problem.connection, sol.w_star)
    lines = [f"# K={problem.K} connection={problem.connection.value}", "kind,bound_on_f_prime,max_beta"]
    for r in reports:
        lines.append(f"{r.kind.value},{_fmt(r.bound_on_f_prime)},{_fmt(r.beta)}")
    lines.append(f"recommended_beta,{_fmt(recommended_beta(reports))},")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    problem = load_problem(args.problem)
    if args.resolution < 10:
        raise GeoProjError(f"--resolution must be at least 10, got {args.resolution}")
    sol = _oracle_for(problem, args.resolution)
    residual = float(np.max(np.abs(pythagorean_residuals(problem, sol.w_star))))
    report = {
        "method": sol.method,
        "w_star": [float(x) for x in sol.w_star],
        "divergence": sol.divergence_at_star,
        "pythagorean_residual": residual,
    }
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_nmf(args) -> int:
    X = read_matrix(args.matrix)
    config = RunConfig(tol_gamma=args.tol_gamma, max_iters=args.max_iters, record_trace=False)
    res = apps.nmf(X, args.rank, config=config, max_outer=args.max_outer, tol=args.tol, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "P.csv", res.P)
    write_matrix(out / "W.csv", res.W)
    with open(out / "objective.csv", "w") as fh:
        fh.write("iteration,step,objective\n")
        for row in res.objective_log:
            fh.write(f"{row['iteration']},{row['step']},{row['objective']:.17g}\n")
    sys.stdout.write(f"final objective {res.objective:.17g}\n")
    return EXIT_OK


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    problem, w_star = make_interior_problem(rng, args.d, args.K, Connection(args.connection), offset=args.offset)
    _emit(dump_problem(problem), args.out)
    sys.stderr.write("w_star " + " ".join(f"{x:.17g}" for x in w_star) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoproj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="run a projection algorithm on a problem file")
    p.add_argument("problem")
    p.add_argument("--algorithm", "-a", default="A", choices=sorted(ALGORITHMS))
    p.add_argument("--beta", type=float, default=None, help="sigmoid beta (default: from the stability bound)")
    p.add_argument("--tol", type=float, default=1e-10, help="stop when max|gamma| <= tol")
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--inner-L", type=int, default=1, help="inner updates per component (B, Ba, C)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="step size for grad")
    p.add_argument("--epsilon", type=float, default=0.1, help="initial step for boundary")
    p.add_argument("--trace", help="write a per-iteration CSV trace here")
    p.add_argument("--out", help="write the JSON summary here instead of stdout")
    p.add_argument("--echo", action="store_true", help="print the parsed problem and exit")
    p.set_defaults(func=cmd_project)

    b = sub.add_parser("bounds", help="print stability bounds for a problem")
    b.add_argument("problem")
    b.add_argument("--resolution", type=int, default=60)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    o = sub.add_parser("oracle", help="brute-force projection with a Pythagorean certificate")
    o.add_argument("problem")
    o.add_argument("--resolution", type=int, default=60)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    n = sub.add_parser("nmf", help="mixture factorization of a nonnegative CSV matrix")
    n.add_argument("matrix")
    n.add_argument("--rank", "-K", type=int, required=True)
    n.add_argument("--out-dir", default=".")
    n.add_argument("--max-outer", type=int, default=50)
    n.add_argument("--tol", type=float, default=1e-6)
    n.add_argument("--tol-gamma", type=float, default=1e-10)
    n.add_argument("--max-iters", type=int, default=apps.NMF_COLUMN_ITERS, help="per-column iteration budget")
    n.add_argument("--seed", type=int, default=0)
    n.set_defaults(func=cmd_nmf)

    g = sub.add_parser("gen", help="write a random problem with a known interior projection")
    g.add_argument("--d", type=int, default=5)
    g.add_argument("--K", type=int, default=2)
    g.add_argument("--connection", default="e_as_nabla", choices=[c.value for c in Connection])
    g.add_argument("--offset", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
