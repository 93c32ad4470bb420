"""Command-line interface: ``fireworks {generate,solve,bench,path}``.

Exit codes: 0 success, 1 a solver did not reach its certificate, 2 usage
error, 3 I/O or data-format error.
"""
import argparse
import os
import sys

from .data import DataFormatError, generate_toy, lambda_max, load_csv_dense, load_svmlight
from .data import write_svmlight
from .metrics import (SOLVER_NAMES, BenchmarkSpec, SolverOptions, default_ratios,
                      run_benchmark, run_lambda_grid, run_solver)
from .penalty import KINDS, Penalty
from .report import write_solution, write_trace

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

DEFAULT_THETA = {"logsum": 1.0, "mcp": 3.0, "scad": 3.7}


class CliIOError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _unit_float(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"expected a number in (0, 1), got {text}")
    return value


def _float_list(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values or any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError(f"expected positive numbers, got {text!r}")
    return values


def _solver_list(text):
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in names if t not in SOLVER_NAMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"invalid solver {bad[0] if bad else text!r} (choose from {', '.join(SOLVER_NAMES)})")
    return names


def _add_data_flags(p, required):
    p.add_argument("--data", required=required, metavar="PATH",
                   help="input file (svmlight or csv)")
    p.add_argument("--format", choices=("svmlight", "csv"),
                   help="file format; guessed from the extension when omitted")
    p.add_argument("--header", action="store_true", help="csv has a header row")
    p.add_argument("--target-col", type=int, default=0, metavar="I",
                   help="csv column holding the target (default 0; negative counts from the end)")


def _add_toy_flags(p):
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--d", type=_positive_int, default=1000)
    p.add_argument("--p", type=_nonneg_int, default=30)
    p.add_argument("--sigma", type=float, default=0.01, help="noise level")


def _add_penalty_flags(p):
    p.add_argument("--penalty", choices=sorted(KINDS), default="logsum")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--lambda", dest="lam", type=_positive_float, metavar="LAM")
    group.add_argument("--lambda-ratio", dest="lam_ratio", type=_positive_float,
                       metavar="K", help="lambda = K * max_j |x_j^T y|")
    p.add_argument("--theta", type=_positive_float, default=None,
                   help="penalty shape (default 1 logsum, 3 mcp, 3.7 scad)")


def _add_solver_flags(p, multi=False, sigma_flag="--ls-sigma"):
    if multi:
        p.add_argument("--solver", type=_solver_list, default=["fireworks-bcd"],
                       help="comma-separated solver names")
        p.add_argument("--tol", type=_float_list, default=[1e-5],
                       help="comma-separated stopping tolerances")
    else:
        p.add_argument("--solver", choices=SOLVER_NAMES, default="fireworks-bcd")
        p.add_argument("--tol", type=_positive_float, default=1e-5)
    p.add_argument("--n-added", type=_positive_int, default=None)
    p.add_argument("--init-set-size", type=_positive_int, default=10)
    p.add_argument("--max-outer", type=_nonneg_int, default=1000)
    p.add_argument("--inner-tol-init", type=_positive_float, default=0.1,
                   help="first inner tolerance, relative to r'(0)")
    p.add_argument("--inner-tol-decay", type=_unit_float, default=0.8)
    p.add_argument("--inner-max-iter", type=_positive_int, default=100_000,
                   help="iteration cap of each inner solve")
    p.add_argument(sigma_flag, dest="ls_sigma", type=_unit_float, default=0.1,
                   help="sufficient-decrease constant of the proximal gradient line search")
    p.add_argument("--no-prune", action="store_true",
                   help="keep zero-weight features in the working set")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fireworks",
        description="Working-set solvers for least squares with non-convex sparse penalties.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic toy problem in svmlight format")
    _add_toy_flags(gen)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, metavar="PATH",
                     help="svmlight output; the true weights go to PATH.truth")

    solve = sub.add_parser("solve", help="solve one problem")
    _add_data_flags(solve, required=True)
    _add_penalty_flags(solve)
    _add_solver_flags(solve, sigma_flag="--sigma")
    solve.add_argument("--out", metavar="PATH", help="solution file")
    solve.add_argument("--out-dir", metavar="DIR",
                       help="directory for solution.txt and trace.json")
    solve.add_argument("--trace", metavar="PATH", help="per-iteration trace (JSON)")

    bench = sub.add_parser("bench", help="benchmark solvers over tolerances and repetitions")
    _add_data_flags(bench, required=False)
    _add_toy_flags(bench)
    _add_penalty_flags(bench)
    _add_solver_flags(bench, multi=True)
    bench.add_argument("--reps", type=_positive_int, default=1)
    bench.add_argument("--out-dir", metavar="DIR", default=".")

    path = sub.add_parser("path", help="warm-started solves along a lambda grid")
    _add_data_flags(path, required=False)
    _add_toy_flags(path)
    path.add_argument("--penalty", choices=sorted(KINDS), default="logsum")
    path.add_argument("--theta", type=_positive_float, default=None)
    path.add_argument("--ratios", type=_float_list, default=None,
                      help="descending comma-separated K values (default 10 from 0.6 to 0.01)")
    path.add_argument("--no-warm-start", action="store_true")
    _add_solver_flags(path)
    path.add_argument("--out-dir", metavar="DIR", default=".")
    return parser


def parse_args(argv):
    """Parse ``argv``; usage errors exit with code 2, ``--help`` with 0."""
    args = build_parser().parse_args(argv)
    if getattr(args, "theta", None) is None and hasattr(args, "penalty"):
        args.theta = DEFAULT_THETA[args.penalty]
    return args


def _load(args):
    fmt = args.format or ("csv" if args.data.lower().endswith(".csv") else "svmlight")
    try:
        if fmt == "csv":
            return load_csv_dense(args.data, args.target_col, header=args.header)
        return load_svmlight(args.data)
    except (OSError, DataFormatError) as exc:
        raise CliIOError(f"cannot read {args.data}: {exc}") from exc


def _dataset(args, seed):
    if args.data:
        return _load(args)
    return generate_toy(args.n, args.d, args.p, args.sigma, seed=seed)


def _options(args):
    return SolverOptions(n_added=args.n_added, init_set_size=args.init_set_size,
                         max_outer=args.max_outer, inner_tol_init=args.inner_tol_init,
                         inner_tol_decay=args.inner_tol_decay, sigma=args.ls_sigma,
                         prune=not args.no_prune, max_iter=args.inner_max_iter)


def _makedirs(path):
    if path:
        try:
            os.makedirs(path, exist_ok=True)
        except OSError as exc:
            raise CliIOError(f"cannot create {path}: {exc}") from exc


def _cmd_generate(args):
    ds = generate_toy(args.n, args.d, args.p, args.sigma, seed=args.seed)
    _makedirs(os.path.dirname(args.out))
    try:
        write_svmlight(args.out, ds.X, ds.y)
        write_solution(args.out + ".truth", ds.w_true)
    except OSError as exc:
        raise CliIOError(f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {args.out} (n={ds.n}, d={ds.d}, p={ds.w_true.nnz}) and {args.out}.truth")
    return EXIT_OK


def _cmd_solve(args):
    ds = _load(args)
    lam = args.lam if args.lam is not None else args.lam_ratio * lambda_max(ds.X, ds.y)
    try:
        params = Penalty(args.penalty, lam, args.theta)
        opts = _options(args)
    except ValueError as exc:
        print(f"fireworks solve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_solver(args.solver, ds, params, args.tol, opts)
    out, trace = args.out, args.trace
    if args.out_dir:
        _makedirs(args.out_dir)
        out = out or os.path.join(args.out_dir, "solution.txt")
        trace = trace or os.path.join(args.out_dir, "trace.json")
    try:
        if out:
            write_solution(out, report.solution)
        if trace:
            write_trace(trace, report)
    except OSError as exc:
        raise CliIOError(f"cannot write output: {exc}") from exc
    print(f"{report.solver}: objective={report.objective:.10g} "
          f"support={report.support_size} violation={report.final_violation:.3e} "
          f"seconds={report.seconds:.3f} converged={report.converged}")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _write_report(report, out_dir, stem):
    _makedirs(out_dir)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    try:
        report.write_csv(csv_path)
        report.write_json(json_path)
    except OSError as exc:
        raise CliIOError(f"cannot write report: {exc}") from exc
    return csv_path, json_path


def _cmd_bench(args):
    data = _load(args) if args.data else {"n": args.n, "d": args.d, "p": args.p,
                                          "sigma": args.sigma}
    try:
        spec = BenchmarkSpec(data=data, penalty=args.penalty, theta=args.theta,
                             lam_ratio=args.lam_ratio, lam=args.lam, solvers=args.solver,
                             tols=args.tol, repetitions=args.reps, seed_base=args.seed,
                             options=_options(args))
    except ValueError as exc:
        print(f"fireworks bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_benchmark(spec)
    csv_path, _ = _write_report(report, args.out_dir, "bench")
    for agg in report.aggregates():
        print(f"{agg['solver']} tol={agg['tol']:.0e}: "
              f"{agg['seconds_mean']:.3f}+-{agg['seconds_std']:.3f}s "
              f"support={agg['support_size_mean']:.1f} "
              f"converged={agg['converged']}/{agg['repetitions']}")
    print(f"wrote {csv_path}")
    ok = all(row["converged"] for row in report.rows)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def _cmd_path(args):
    ds = _dataset(args, args.seed)
    ratios = args.ratios if args.ratios is not None else default_ratios()
    if any(b > a for a, b in zip(ratios, ratios[1:])):
        print("fireworks path: error: argument --ratios: must be descending", file=sys.stderr)
        return EXIT_USAGE
    report = run_lambda_grid(ds, args.penalty, args.theta, ratios, args.solver, args.tol,
                             _options(args), warm_start=not args.no_warm_start)
    csv_path, _ = _write_report(report, args.out_dir, "path")
    print(f"{args.solver}: {len(report.rows)} lambdas in {report.total_seconds:.3f}s, "
          f"{report.total_inner_iters} inner iterations; wrote {csv_path}")
    ok = all(row["converged"] for row in report.rows)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


COMMANDS = {"generate": _cmd_generate, "solve": _cmd_solve, "bench": _cmd_bench,
            "path": _cmd_path}


def main(argv=None):
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except CliIOError as exc:
        print(f"fireworks {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
