"""Support recovery metric, solver registry and the benchmark runners.

Wall time is measured around the solver call only, with a monotonic
high-resolution clock. Everything else in a report is a deterministic
function of the seeds.
"""
import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .baseline import MMConfig, mm_solve
from .data import SparseSolution, generate_toy, lambda_max
from .inner import InnerConfig
from .penalty import Penalty
from .wset import OuterConfig, fireworks_solve, full_solve, maxvc_solve

SOLVER_NAMES = ("gist", "bcd", "fireworks-gist", "fireworks-bcd",
                "maxvc-gist", "maxvc-bcd", "mm-bcd")

ROW_FIELDS = ("solver", "ratio", "lam", "tol", "rep", "seed", "seconds",
              "support_size", "objective", "final_violation", "converged",
              "outer_iters", "inner_iters", "f_measure")


def support_f_measure(estimated, truth):
    """Harmonic mean of precision and recall of the nonzero index sets."""
    if estimated.dim != truth.dim:
        raise ValueError(f"dimension mismatch: {estimated.dim} != {truth.dim}")
    est, tru = estimated.support(), truth.support()
    if not est and not tru:
        return 1.0
    if not est or not tru:
        return 0.0
    hit = len(est & tru)
    if hit == 0:
        return 0.0
    precision, recall = hit / len(est), hit / len(tru)
    return 2 * precision * recall / (precision + recall)


@dataclass
class SolverOptions:
    """Solver knobs shared by the benchmark runners and the CLI."""

    n_added: int = None
    init_set_size: int = 10
    max_outer: int = 1000
    inner_tol_init: float = 0.1
    inner_tol_decay: float = 0.8
    sigma: float = 0.1
    prune: bool = True
    max_iter: int = 100_000


def run_solver(name, dataset, params, tol, options=None, w0=None):
    """Dispatch ``name`` (one of SOLVER_NAMES) at certificate tolerance ``tol``."""
    opt = options or SolverOptions()
    if name not in SOLVER_NAMES:
        raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVER_NAMES)}")
    inner = InnerConfig(tol=tol, max_iter=opt.max_iter, sigma=opt.sigma)
    if name in ("gist", "bcd"):
        return full_solve(dataset, params, name, inner, w0=w0)
    if name == "mm-bcd":
        # fixed lasso tolerance, tightened only when the target is finer
        cfg = MMConfig(outer_tol=tol, max_mm_iter=max(opt.max_outer, 1),
                       lasso_tol=min(1e-6, tol / 10), lasso_max_iter=opt.max_iter)
        return mm_solve(dataset, params, cfg, w0=w0)
    rule, inner_solver = name.split("-")
    cfg = OuterConfig(tol=tol, n_added=opt.n_added, init_set_size=opt.init_set_size,
                      max_outer=opt.max_outer, prune=opt.prune,
                      inner_tol_init=opt.inner_tol_init,
                      inner_tol_decay=opt.inner_tol_decay,
                      inner_solver=inner_solver, inner=inner)
    solve = fireworks_solve if rule == "fireworks" else maxvc_solve
    return solve(dataset, params, cfg, w0=w0)


@dataclass
class BenchmarkSpec:
    """One benchmark: a data source, a penalty, solvers, tolerances and repetitions.

    ``data`` is either ``{"n", "d", "p", "sigma"}`` for the toy generator
    (repetition i uses seed ``seed_base + i``) or a loaded Dataset reused by
    every repetition. Exactly one of ``lam_ratio`` and ``lam`` is set.
    """

    data: object
    penalty: str = "logsum"
    theta: float = 1.0
    lam_ratio: float = None
    lam: float = None
    solvers: list = field(default_factory=lambda: ["fireworks-bcd"])
    tols: list = field(default_factory=lambda: [1e-5])
    repetitions: int = 1
    seed_base: int = 0
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if (self.lam_ratio is None) == (self.lam is None):
            raise ValueError("set exactly one of lam_ratio and lam")
        for name in self.solvers:
            if name not in SOLVER_NAMES:
                raise ValueError(f"unknown solver {name!r}")

    def dataset(self, rep):
        if isinstance(self.data, dict):
            cfg = self.data
            return generate_toy(cfg["n"], cfg["d"], cfg["p"], cfg.get("sigma", 0.01),
                                seed=self.seed_base + rep)
        return self.data

    def penalty_for(self, dataset):
        lam = self.lam if self.lam is not None else self.lam_ratio * lambda_max(
            dataset.X, dataset.y)
        return Penalty(self.penalty, lam, self.theta)


@dataclass
class BenchmarkReport:
    rows: list = field(default_factory=list)

    def aggregates(self):
        """Mean and std (ddof 0, so 0 for one repetition) per (solver, ratio, lam, tol)."""
        groups = {}
        for row in self.rows:
            key = (row["solver"], row["ratio"], row["lam"], row["tol"])
            groups.setdefault(key, []).append(row)
        out = []
        for (solver, ratio, lam, tol), rows in groups.items():
            agg = {"solver": solver, "ratio": ratio, "lam": lam, "tol": tol,
                   "repetitions": len(rows),
                   "converged": sum(bool(r["converged"]) for r in rows)}
            for key in ("seconds", "support_size", "objective", "inner_iters"):
                vals = np.array([r[key] for r in rows], dtype=np.float64)
                agg[f"{key}_mean"] = float(vals.mean())
                agg[f"{key}_std"] = float(vals.std()) if len(rows) > 1 else 0.0
            out.append(agg)
        return out

    @property
    def total_seconds(self):
        return float(sum(r["seconds"] for r in self.rows))

    @property
    def total_inner_iters(self):
        return int(sum(r["inner_iters"] for r in self.rows))

    def to_dict(self):
        return {"rows": [dict(r) for r in self.rows], "aggregates": self.aggregates(),
                "total_seconds": self.total_seconds,
                "total_inner_iters": self.total_inner_iters}

    @classmethod
    def from_dict(cls, doc):
        return cls(rows=[dict(r) for r in doc["rows"]])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=ROW_FIELDS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: ("" if row[k] is None else
                                     repr(row[k]) if isinstance(row[k], float) else row[k])
                                 for k in ROW_FIELDS})

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def read_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _row(report, name, ratio, lam, tol, rep, seed, seconds, truth):
    fm = None
    if truth is not None:
        fm = support_f_measure(report.solution, truth)
    return {
        "solver": name, "ratio": ratio, "lam": float(lam), "tol": float(tol),
        "rep": rep, "seed": seed, "seconds": seconds,
        "support_size": report.support_size, "objective": float(report.objective),
        "final_violation": float(report.final_violation),
        "converged": bool(report.converged), "outer_iters": len(report.iterations),
        "inner_iters": report.total_inner_iters, "f_measure": fm,
    }


def run_benchmark(spec):
    """Every (repetition, tolerance, solver) cell of ``spec``, sequentially.

    Solvers of one repetition share its dataset. Non-convergence is recorded
    in the row, not raised.
    """
    report = BenchmarkReport()
    for rep in range(spec.repetitions):
        dataset = spec.dataset(rep)
        params = spec.penalty_for(dataset)
        seed = spec.seed_base + rep if isinstance(spec.data, dict) else None
        for tol in spec.tols:
            for name in spec.solvers:
                t0 = time.perf_counter()
                res = run_solver(name, dataset, params, tol, spec.options)
                seconds = time.perf_counter() - t0
                report.rows.append(_row(res, name, spec.lam_ratio, params.lam, tol,
                                        rep, seed, seconds, dataset.w_true))
    return report


def default_ratios(num=10):
    """Geometric grid from 0.6 down to 0.01 times lambda_max."""
    return np.geomspace(0.6, 0.01, num).tolist()


def run_lambda_grid(dataset, penalty="logsum", theta=1.0, ratios=None,
                    solver="fireworks-bcd", tol=1e-5, options=None,
                    warm_start=True):
    """Solve along descending ``ratios``, warm-starting from the previous solution."""
    ratios = default_ratios() if ratios is None else [float(k) for k in ratios]
    if any(b > a for a, b in zip(ratios, ratios[1:])):
        raise ValueError("ratios must be sorted in descending order")
    lmax = lambda_max(dataset.X, dataset.y)
    report = BenchmarkReport()
    w = None
    for ratio in ratios:
        params = Penalty(penalty, ratio * lmax, theta)
        t0 = time.perf_counter()
        res = run_solver(solver, dataset, params, tol, options, w0=w)
        seconds = time.perf_counter() - t0
        report.rows.append(_row(res, solver, ratio, params.lam, tol, 0, None,
                                seconds, dataset.w_true))
        if warm_start:
            w = res.solution.to_dense()
    return report

