"""Working-set meta-solvers: FireWorks and maximum-violation (MaxVC).

Both repeatedly solve the problem restricted to a working set A_k, then grow
the set. FireWorks keeps a pseudo-residual s_k inside the slab intersection
C, moves it toward the current residual r_k as far as feasibility allows
(step alpha_k) and adds the features whose slab boundary is nearest to the
new s_{k+1}. MaxVC adds the features whose slabs r_k violates the most.

The run is certified when the full Fermat violation is below ``tol``; for
FireWorks the step alpha_k must also be 1 (up to 1e-9), which is equivalent
to stationarity for an exact restricted solution.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data import SparseSolution
from .geometry import SlabSystem, ratio_test
from .inner import SOLVERS, InnerConfig
from .report import IterationRecord, SolveReport

ALPHA_ONE = 1.0 - 1e-9


def default_n_added(d):
    """30 features per iteration up to d = 1e4, then 0.3% of d."""
    return 30 if d <= 10_000 else int(math.ceil(0.003 * d))


@dataclass
class OuterConfig:
    """Outer-loop settings.

    The restricted problem at outer iteration k is solved to Fermat
    tolerance ``max(tol, inner_tol_init * c * inner_tol_decay**k)``, a
    summable schedule floored at the target tolerance. ``c`` is the slab
    threshold r'(0), or 1 when ``inner_tol_relative`` is off.
    """

    tol: float = 1e-5
    n_added: int = None
    init_set_size: int = 10
    max_outer: int = 1000
    prune: bool = True
    inner_tol_init: float = 0.1
    inner_tol_decay: float = 0.8
    inner_tol_relative: bool = True
    inner_solver: str = "bcd"
    inner: InnerConfig = field(default_factory=lambda: InnerConfig(max_iter=100_000))
    max_refine: int = 8
    reset_pseudo_residual: bool = False
    record_history: bool = False

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0 < self.inner_tol_decay < 1:
            raise ValueError("inner_tol_decay must lie in (0, 1)")
        if self.inner_tol_init <= 0:
            raise ValueError("inner_tol_init must be positive")
        if self.n_added is not None and self.n_added < 1:
            raise ValueError("n_added must be at least 1")
        if self.init_set_size < 1:
            raise ValueError("init_set_size must be at least 1")
        if self.inner_solver not in SOLVERS:
            raise ValueError(f"unknown inner solver {self.inner_solver!r}")

    def inner_tol(self, k, threshold=1.0):
        scale = threshold if self.inner_tol_relative else 1.0
        return max(self.tol, self.inner_tol_init * scale * self.inner_tol_decay ** k)


@dataclass
class WorkingSetState:
    active: np.ndarray
    s: np.ndarray
    r: np.ndarray
    alpha: float = 0.0
    tau: float = None
    outer_iter: int = 0


def _top_k(scores, k):
    """Indices of the k largest scores, ties broken by smaller index."""
    idx = np.arange(scores.size)
    order = np.lexsort((idx, -scores))
    return np.sort(order[:k])


def init_working_set(dataset, k0):
    """The ``k0`` features with largest |x_j^T y|."""
    if k0 < 1:
        raise ValueError("k0 must be at least 1")
    return _top_k(np.abs(dataset.X.correlations(dataset.y)), min(k0, dataset.d))


def prune(active, w):
    """Drop indices whose restricted weight is exactly zero."""
    active = np.asarray(active, dtype=np.intp)
    return active[np.asarray(w) != 0]


def _candidates(d, excluded):
    mask = np.ones(d, dtype=bool)
    mask[np.asarray(list(excluded), dtype=np.intp)] = False
    return np.flatnonzero(mask)


def select_by_boundary_distance(s_next, excluded, n_added, sys, corr=None):
    """The ``n_added`` features outside ``excluded`` nearest to their slab boundary.

    Returns ``(indices, tau)`` where ``tau`` is the largest selected
    distance. Features at distance exactly zero are always included.
    """
    if corr is None:
        corr = sys.X.correlations(s_next)
    cand = _candidates(sys.d, excluded)
    cand = cand[sys.valid[cand]]
    if cand.size == 0:
        return np.zeros(0, dtype=np.intp), None
    dist = sys.boundary_distances(corr)[cand]
    order = np.lexsort((cand, dist))
    take = order[:n_added]
    on_boundary = np.flatnonzero(dist == 0.0)
    take = np.union1d(take, on_boundary)
    tau = float(np.max(dist[take]))
    return np.sort(cand[take]), tau


def select_by_violation(r, excluded, n_added, sys, corr=None):
    """The ``n_added`` features outside ``excluded`` whose slab r violates most."""
    if corr is None:
        corr = sys.X.correlations(r)
    cand = _candidates(sys.d, excluded)
    dist = sys.slab_distances(corr)[cand]
    keep = dist > 0
    cand, dist = cand[keep], dist[keep]
    order = np.lexsort((cand, -dist))
    return np.sort(cand[order[:n_added]])


def _solve_restricted(dataset, params, active, w, xi, cfg):
    X_A = dataset.X.subset(active)
    inner_cfg = InnerConfig(**{**cfg.inner.__dict__, "tol": xi, "record": False})
    res = SOLVERS[cfg.inner_solver](X_A, dataset.y, params, w[active], inner_cfg)
    w = np.zeros(dataset.d)
    w[active] = res.w
    # rebuilt from scratch so that certificates do not inherit drift
    r = dataset.y - X_A.matvec(res.w)
    return w, r, res


def _working_set_solve(dataset, params, cfg, w0, rule, name):
    X, y = dataset.X, dataset.y
    d, n = dataset.d, dataset.n
    sys = SlabSystem(X, params.threshold)
    n_added = cfg.n_added or default_n_added(d)

    w = np.zeros(d) if w0 is None else np.array(w0, dtype=np.float64)
    active = np.union1d(init_working_set(dataset, cfg.init_set_size),
                        np.flatnonzero(w)).astype(np.intp)
    state = WorkingSetState(active=active, s=np.zeros(n), r=y.copy())
    corr_s = np.zeros(d)
    records, history = [], []
    converged = False
    viol = np.inf
    t0 = time.perf_counter()

    for k in range(cfg.max_outer):
        xi = cfg.inner_tol(k, sys.threshold)
        inner_iters = 0
        for attempt in range(cfg.max_refine + 1):
            w, r, res = _solve_restricted(dataset, params, state.active, w, xi, cfg)
            inner_iters += res.iterations
            corr = X.correlations(r)
            viol = float(np.max(params.fermat_violation(corr, w)))
            if rule == "fireworks":
                if cfg.reset_pseudo_residual:
                    state.s, corr_s = np.zeros(n), np.zeros(d)
                step = ratio_test(corr, corr_s, sys)
            else:
                step = ratio_test(corr, np.zeros(d), sys)
            at_one = step.alpha >= ALPHA_ONE
            # an exact restricted solution keeps r inside every slab of A, so
            # a step blocked from inside A means the solve was too loose
            blocked_inside = (rule == "fireworks" and not at_one
                              and step.blocking_index in set(state.active.tolist()))
            loose = at_one and viol > cfg.tol
            if rule == "maxvc" and viol > cfg.tol:
                loose = select_by_violation(
                    r, state.active, n_added, sys, corr=corr).size == 0
            if not (loose or blocked_inside) or attempt == cfg.max_refine:
                break
            if loose and xi > cfg.tol:
                xi = cfg.tol
            else:
                xi = max(xi * 1e-2, 1e-14)

        state.r = r
        state.alpha = step.alpha
        state.outer_iter = k + 1
        f = 0.5 * float(r @ r) + params.total(w)
        if rule == "fireworks":
            converged = viol <= cfg.tol and step.alpha >= ALPHA_ONE
        else:
            converged = viol <= cfg.tol
        records.append(IterationRecord(
            iter=k + 1, objective=f, alpha=step.alpha,
            set_size=int(state.active.size), max_violation=viol,
            inner_iters=int(inner_iters), inner_converged=bool(res.converged),
            elapsed_seconds=time.perf_counter() - t0))

        s_prev = state.s
        if rule == "fireworks":
            if step.alpha == 1.0:
                state.s = r.copy()
                corr_s = corr.copy()
            elif step.alpha > 0.0:
                state.s = step.alpha * r + (1.0 - step.alpha) * state.s
                corr_s = step.alpha * corr + (1.0 - step.alpha) * corr_s

        entry = None
        if cfg.record_history:
            entry = {"active": state.active.copy(), "w": w.copy(), "r": r.copy(),
                     "s": s_prev.copy(), "s_next": state.s.copy(),
                     "alpha": step.alpha, "blocking": step.blocking_index,
                     "max_violation": viol, "tau": None, "added": np.zeros(0, np.intp)}
            history.append(entry)
        if converged:
            break

        kept = prune(state.active, w[state.active]) if cfg.prune else state.active
        if rule == "fireworks":
            added, tau = select_by_boundary_distance(
                state.s, kept, n_added, sys, corr=corr_s)
            if step.blocking_index is not None and step.blocking_index not in kept:
                added = np.union1d(added, [step.blocking_index]).astype(np.intp)
            state.tau = tau
        else:
            added = select_by_violation(r, kept, n_added, sys, corr=corr)
            if added.size == 0 and kept.size == 0:
                added = init_working_set(dataset, cfg.init_set_size)
        state.active = np.union1d(kept, added).astype(np.intp)
        if entry is not None:
            entry["tau"] = state.tau
            entry["added"] = np.asarray(added, dtype=np.intp)

    if not records:
        viol = float(np.max(params.fermat_violation(
            X.correlations(y - X.matvec(w)), w))) if d else 0.0
    f = 0.5 * float(np.sum((y - X.matvec(w)) ** 2)) + params.total(w)
    return SolveReport(
        solver=name, solution=SparseSolution.from_dense(w), converged=converged,
        final_violation=viol, objective=f, iterations=records, history=history,
        seconds=time.perf_counter() - t0)


def fireworks_solve(dataset, params, cfg=None, w0=None):
    """Feasible-residual working-set solver.

    Parameters
    ----------
    dataset : Dataset
    params : Penalty
    cfg : OuterConfig, optional
    w0 : ndarray of shape (d,), optional
        Warm start; its support joins the initial working set.

    Returns
    -------
    SolveReport
    """
    cfg = cfg or OuterConfig()
    return _working_set_solve(dataset, params, cfg, w0, "fireworks",
                              f"fireworks-{cfg.inner_solver}")


def maxvc_solve(dataset, params, cfg=None, w0=None):
    """Working set grown by the most violated optimality conditions."""
    cfg = cfg or OuterConfig()
    return _working_set_solve(dataset, params, cfg, w0, "maxvc",
                              f"maxvc-{cfg.inner_solver}")


def full_solve(dataset, params, inner_solver="bcd", cfg=None, w0=None):
    """Run an inner solver on all d features and wrap the result in a report."""
    cfg = cfg or InnerConfig(tol=1e-5, max_iter=100_000)
    t0 = time.perf_counter()
    res = SOLVERS[inner_solver](dataset.X, dataset.y, params, w0, cfg)
    elapsed = time.perf_counter() - t0
    rec = IterationRecord(iter=1, objective=res.objective, alpha=None,
                          set_size=dataset.d, max_violation=res.final_violation,
                          inner_iters=res.iterations, inner_converged=res.converged,
                          elapsed_seconds=elapsed)
    return SolveReport(
        solver=inner_solver, solution=SparseSolution.from_dense(res.w),
        converged=res.converged, final_violation=res.final_violation,
        objective=res.objective, iterations=[rec], seconds=elapsed)
