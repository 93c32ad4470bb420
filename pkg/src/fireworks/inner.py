"""Solvers for the (restricted) penalized least-squares problem.

    min_w  0.5 * ||y - X w||^2 + sum_j r(|w_j|)

Two solvers are provided: a monotone proximal gradient method with
Barzilai-Borwein curvature and backtracking (``gist_solve``) and cyclic block
coordinate descent with exact coordinate minimization (``bcd_solve``). Both
stop on the Fermat violation, warm start from ``w0`` and never increase the
objective.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .data import SparseSolution
from .penalty import _fermat, _penalty_sum, _prox


@dataclass
class InnerConfig:
    """Settings shared by the inner solvers.

    ``step_init`` is ``'bb'`` (Barzilai-Borwein) or a fixed positive
    curvature. Curvatures are inverse step sizes, as in GIST.
    """

    tol: float = 1e-6
    max_iter: int = 10_000
    sigma: float = 0.1
    step_init: object = "bb"
    step_shrink: float = 0.5
    refresh: int = 50
    record: bool = False

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not 0 < self.step_shrink < 1:
            raise ValueError(f"step_shrink must lie in (0, 1), got {self.step_shrink}")
        if self.step_init != "bb" and not float(self.step_init) > 0:
            raise ValueError("step_init must be 'bb' or a positive number")
        if self.tol <= 0 or self.max_iter < 0:
            raise ValueError("tol must be positive and max_iter non-negative")


@dataclass
class InnerResult:
    w: np.ndarray
    residual: np.ndarray
    iterations: int
    final_violation: float
    objective: float
    converged: bool
    history: dict = field(default_factory=dict)


class NumericalError(FloatingPointError):
    pass


def objective(X, y, w, params):
    """0.5 ||y - X w||^2 + sum_j r(|w_j|)."""
    w = np.asarray(w, dtype=np.float64)
    r = y - X.matvec(w)
    return 0.5 * float(r @ r) + params.total(w)


def smooth_gradient(X, y, w):
    """Gradient of the least-squares part, -X^T (y - X w)."""
    return -X.correlations(y - X.matvec(np.asarray(w, dtype=np.float64)))


def violations(corr, w, params):
    return params.fermat_violation(corr, w)


def max_violation(X, y, w, params, scope=None):
    """Largest Fermat violation over ``scope`` (all coordinates by default).

    ``w`` is a :class:`SparseSolution` or a dense vector of length d.
    """
    if isinstance(w, SparseSolution):
        w = w.to_dense()
    w = np.asarray(w, dtype=np.float64)
    r = y - X.matvec(w)
    corr = X.correlations(r)
    if scope is not None:
        scope = np.asarray(sorted(scope), dtype=np.intp)
        corr, w = corr[scope], w[scope]
    if corr.size == 0:
        return 0.0
    return float(np.max(params.fermat_violation(corr, w)))


def _check_finite(value, what):
    if not np.isfinite(value):
        raise NumericalError(f"non-finite {what}")


def gist_solve(X, y, params, w0=None, cfg=None):
    """Monotone proximal gradient with sufficient-decrease backtracking.

    A step with curvature ``eta`` is accepted once
    ``f(w+) <= f(w) - sigma / 2 * eta * ||w+ - w||^2``, the left side being
    evaluated as a difference so it stays accurate near convergence; the next trial
    curvature is the Barzilai-Borwein estimate clipped to [1e-12, 1e12].

    Parameters
    ----------
    X : DesignMatrix
        Columns of the (restricted) problem.
    y : ndarray of shape (n,)
    params : Penalty
    w0 : ndarray of shape (m,), optional
        Warm start, zero by default.
    cfg : InnerConfig, optional

    Returns
    -------
    InnerResult
        ``history`` holds per-iteration ``objective``, ``eta`` and
        ``step_sq`` arrays when ``cfg.record`` is set.
    """
    cfg = cfg or InnerConfig()
    m = X.d
    w = np.zeros(m) if w0 is None else np.array(w0, dtype=np.float64)
    if w.shape != (m,) or not np.all(np.isfinite(w)):
        raise ValueError("warm start must be a finite vector matching X")
    r = y - X.matvec(w)
    corr = X.correlations(r)
    f = 0.5 * float(r @ r) + params.total(w)
    _check_finite(f, "objective")
    viol = float(np.max(params.fermat_violation(corr, w))) if m else 0.0
    hist = {"objective": [f], "eta": [], "step_sq": []}

    if cfg.step_init == "bb":
        eta = float(np.max(X.col_norms) ** 2) if m else 1.0
        eta = min(max(eta, 1e-12), 1e12)
    else:
        eta = float(cfg.step_init)

    it = 0
    while viol > cfg.tol and it < cfg.max_iter:
        grad = -corr
        for _ in range(200):
            w_new = params.prox(w - grad / eta, 1.0 / eta)
            dw = w_new - w
            step_sq = float(dw @ dw)
            v = X.matvec(dw) if step_sq > 0 else np.zeros_like(r)
            r_new = r - v
            # decrease from the step itself; f_new - f loses it to roundoff
            df = float(v @ v) * 0.5 - float(r @ v) + params.value_change(w, w_new)
            if df <= -0.5 * cfg.sigma * eta * step_sq:
                break
            eta /= cfg.step_shrink
        else:
            # no acceptable step even at tiny step sizes: numerically stalled
            break
        f_new = 0.5 * float(r_new @ r_new) + params.total(w_new)
        _check_finite(f_new, "objective")
        it += 1
        if it % cfg.refresh == 0:
            r_new = y - X.matvec(w_new)
        corr_new = X.correlations(r_new)
        if cfg.record:
            hist["objective"].append(f_new)
            hist["eta"].append(eta)
            hist["step_sq"].append(step_sq)
        if step_sq > 0:
            # gradient difference is corr - corr_new
            bb = float((corr - corr_new) @ dw) / step_sq
            if cfg.step_init == "bb":
                eta = min(max(bb, 1e-12), 1e12)
        w, r, corr, f = w_new, r_new, corr_new, f_new
        viol = float(np.max(params.fermat_violation(corr, w)))
        if step_sq == 0.0 and viol > cfg.tol:
            break

    return InnerResult(w, r, it, viol, f, viol <= cfg.tol,
                       {k: np.array(v) for k, v in hist.items()} if cfg.record else {})


@njit(cache=True)
def _dense_violation(X, r, w, kind, lam, theta):
    m = X.shape[1]
    viol = 0.0
    for j in range(m):
        corr = np.dot(X[:, j], r)
        v = _fermat(corr, w[j], kind, lam, theta)
        if v > viol:
            viol = v
    return viol


@njit(cache=True)
def _sparse_violation(indptr, indices, data, r, w, kind, lam, theta):
    m = indptr.shape[0] - 1
    viol = 0.0
    for j in range(m):
        corr = 0.0
        for p in range(indptr[j], indptr[j + 1]):
            corr += data[p] * r[indices[p]]
        v = _fermat(corr, w[j], kind, lam, theta)
        if v > viol:
            viol = v
    return viol


@njit(cache=True)
def _bcd_dense(X, y, w, r, norms2, kind, lam, theta, tol, max_iter, refresh, hist):
    n, m = X.shape
    viol = _dense_violation(X, r, w, kind, lam, theta)
    it = 0
    while viol > tol and it < max_iter:
        for j in range(m):
            xr = np.dot(X[:, j], r)
            old = w[j]
            new = _prox(old + xr / norms2[j], 1.0 / norms2[j], kind, lam, theta)
            if new != old:
                delta = new - old
                for i in range(n):
                    r[i] -= delta * X[i, j]
                w[j] = new
        it += 1
        if it % refresh == 0:
            for i in range(n):
                r[i] = y[i]
            for j in range(m):
                if w[j] != 0.0:
                    for i in range(n):
                        r[i] -= w[j] * X[i, j]
        if hist.shape[0] > it:
            hist[it] = 0.5 * (r @ r) + _penalty_sum(w, kind, lam, theta)
        viol = _dense_violation(X, r, w, kind, lam, theta)
    return it, viol


@njit(cache=True)
def _bcd_sparse(indptr, indices, data, y, w, r, norms2, kind, lam, theta,
                tol, max_iter, refresh, hist):
    n = y.shape[0]
    m = indptr.shape[0] - 1
    viol = _sparse_violation(indptr, indices, data, r, w, kind, lam, theta)
    it = 0
    while viol > tol and it < max_iter:
        for j in range(m):
            xr = 0.0
            for p in range(indptr[j], indptr[j + 1]):
                xr += data[p] * r[indices[p]]
            old = w[j]
            new = _prox(old + xr / norms2[j], 1.0 / norms2[j], kind, lam, theta)
            if new != old:
                delta = new - old
                for p in range(indptr[j], indptr[j + 1]):
                    r[indices[p]] -= delta * data[p]
                w[j] = new
        it += 1
        if it % refresh == 0:
            for i in range(n):
                r[i] = y[i]
            for j in range(m):
                if w[j] != 0.0:
                    for p in range(indptr[j], indptr[j + 1]):
                        r[indices[p]] -= w[j] * data[p]
        if hist.shape[0] > it:
            hist[it] = 0.5 * (r @ r) + _penalty_sum(w, kind, lam, theta)
        viol = _sparse_violation(indptr, indices, data, r, w, kind, lam, theta)
    return it, viol


def bcd_solve(X, y, params, w0=None, cfg=None):
    """Cyclic coordinate descent, each coordinate minimized exactly.

    Coordinate j is set to ``prox((x_j^T r + ||x_j||^2 w_j) / ||x_j||^2,
    1 / ||x_j||^2)`` and the residual is updated in place, then rebuilt
    from scratch every ``cfg.refresh`` sweeps. With ``cfg.record`` the
    objective after each sweep is stored in ``history['objective']``.
    """
    cfg = cfg or InnerConfig()
    m = X.d
    if np.any(X.col_norms == 0):
        raise ValueError("bcd_solve requires nonzero columns")
    w = np.zeros(m) if w0 is None else np.array(w0, dtype=np.float64)
    if w.shape != (m,) or not np.all(np.isfinite(w)):
        raise ValueError("warm start must be a finite vector matching X")
    y = np.ascontiguousarray(y, dtype=np.float64)
    r = y - X.matvec(w)
    norms2 = X.col_norms ** 2
    hist = np.full(cfg.max_iter + 1 if cfg.record else 0, np.nan)
    if cfg.record:
        hist[0] = 0.5 * float(r @ r) + params.total(w)
    args = params.args + (float(cfg.tol), int(cfg.max_iter), int(cfg.refresh), hist)
    if X.is_sparse:
        A = X.data
        it, viol = _bcd_sparse(A.indptr, A.indices, A.data, y, w, r, norms2, *args)
    else:
        it, viol = _bcd_dense(X.data, y, w, r, norms2, *args)
    f = 0.5 * float(r @ r) + params.total(w)
    _check_finite(f, "objective")
    history = {"objective": hist[:it + 1]} if cfg.record else {}
    return InnerResult(w, r, int(it), float(viol), f, viol <= cfg.tol, history)


SOLVERS = {"gist": gist_solve, "bcd": bcd_solve}
