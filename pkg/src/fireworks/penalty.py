"""Separable non-convex sparsity penalties r_lambda(|w|).

Three penalties are supported, log-sum, MCP and SCAD. Each one provides its
value, its derivative on [0, inf), a closed-form proximal operator and the
per-coordinate violation of the first-order (Fermat) optimality condition.

The scalar kernels are compiled with numba so that the coordinate descent
loops in :mod:`fireworks.inner` can call them without Python overhead. The
:class:`Penalty` object wraps them for scalar and array inputs.
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

LOGSUM = 0
MCP = 1
SCAD = 2

KINDS = {"logsum": LOGSUM, "mcp": MCP, "scad": SCAD}


@njit(cache=True)
def _value(x, kind, lam, theta):
    if kind == LOGSUM:
        return lam * np.log1p(x / theta)
    if kind == MCP:
        if x <= lam * theta:
            return lam * x - x * x / (2.0 * theta)
        return theta * lam * lam / 2.0
    if x <= lam:
        return lam * x
    if x <= lam * theta:
        return (-x * x + 2.0 * theta * lam * x - lam * lam) / (2.0 * (theta - 1.0))
    return lam * lam * (1.0 + theta) / 2.0


@njit(cache=True)
def _deriv(x, kind, lam, theta):
    # right-continuous branch at the breakpoints
    if kind == LOGSUM:
        return lam / (theta + x)
    if kind == MCP:
        if x < lam * theta:
            return lam - x / theta
        return 0.0
    if x < lam:
        return lam
    if x < lam * theta:
        # clamped: at x = lam the quotient can round one ulp above lam
        return min(lam, (theta * lam - x) / (theta - 1.0))
    return 0.0


@njit(cache=True)
def _value_change(a, b, kind, lam, theta):
    """r(b) - r(a) for a, b >= 0, factored by (b - a) when both share a piece."""
    h = b - a
    if kind == LOGSUM:
        return lam * np.log1p(h / (theta + a))
    if kind == MCP:
        knot = lam * theta
        if a <= knot and b <= knot:
            return h * (lam - (a + b) / (2.0 * theta))
        if a > knot and b > knot:
            return 0.0
    else:
        knot = lam * theta
        if a <= lam and b <= lam:
            return lam * h
        if lam < a <= knot and lam < b <= knot:
            return h * (2.0 * theta * lam - (a + b)) / (2.0 * (theta - 1.0))
        if a > knot and b > knot:
            return 0.0
    return _value(b, kind, lam, theta) - _value(a, kind, lam, theta)


@njit(cache=True)
def _value_change_sum(w, w_new, kind, lam, theta):
    total = 0.0
    for i in range(w.shape[0]):
        if w[i] != w_new[i]:
            total += _value_change(abs(w[i]), abs(w_new[i]), kind, lam, theta)
    return total


@njit(cache=True)
def _obj1d(x, u, step, kind, lam, theta):
    d = x - u
    return d * d / (2.0 * step) + _value(x, kind, lam, theta)


@njit(cache=True)
def _prox(v, step, kind, lam, theta):
    """Global minimizer of (x - v)**2 / (2 step) + r(|x|).

    Every stationary point of each smooth piece and every breakpoint is
    enumerated; the candidate of lowest objective wins, ties going to the
    smaller magnitude.
    """
    u = abs(v)
    if u == 0.0:
        return 0.0
    cand = np.empty(6)
    nc = 0
    if kind == LOGSUM:
        disc = (u + theta) ** 2 - 4.0 * step * lam
        if disc >= 0.0:
            sq = np.sqrt(disc)
            cand[nc] = 0.5 * (u - theta + sq)
            nc += 1
            cand[nc] = 0.5 * (u - theta - sq)
            nc += 1
    elif kind == MCP:
        knot = lam * theta
        denom = 1.0 - step / theta
        if denom > 0.0:
            cand[nc] = (u - step * lam) / denom
            nc += 1
        cand[nc] = min(u, knot)
        nc += 1
        if u > knot:
            cand[nc] = u
            nc += 1
    else:
        knot = lam * theta
        cand[nc] = u - step * lam
        nc += 1
        cand[nc] = min(u, lam)
        nc += 1
        denom = 1.0 / step - 1.0 / (theta - 1.0)
        if denom > 0.0:
            x = (u / step - theta * lam / (theta - 1.0)) / denom
            if x > lam:
                cand[nc] = x
                nc += 1
        cand[nc] = min(u, knot)
        nc += 1
        if u > knot:
            cand[nc] = u
            nc += 1

    best = 0.0
    best_obj = u * u / (2.0 * step)
    for i in range(nc):
        x = cand[i]
        # stray stationary points are harmless: the true objective is evaluated
        if not (x > 0.0 and x <= u):
            continue
        f =_obj1d(x, u, step, kind, lam, theta)
        if f < best_obj or (f == best_obj and x < best):
            best = x
            best_obj = f
    if v < 0.0:
        return -best
    return best


@njit(cache=True)
def _fermat(corr, w, kind, lam, theta):
    if w == 0.0:
        excess = abs(corr) - _deriv(0.0, kind, lam, theta)
        return excess if excess > 0.0 else 0.0
    d = _deriv(abs(w), kind, lam, theta)
    if w > 0.0:
        return abs(corr - d)
    return abs(corr + d)


@njit(cache=True)
def _value_arr(x, kind, lam, theta):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _value(abs(x[i]), kind, lam, theta)
    return out


@njit(cache=True)
def _deriv_arr(x, kind, lam, theta):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _deriv(abs(x[i]), kind, lam, theta)
    return out


@njit(cache=True)
def _prox_arr(v, step, kind, lam, theta):
    out = np.empty(v.shape[0])
    for i in range(v.shape[0]):
        out[i] = _prox(v[i], step, kind, lam, theta)
    return out


@njit(cache=True)
def _fermat_arr(corr, w, kind, lam, theta):
    out = np.empty(corr.shape[0])
    for i in range(corr.shape[0]):
        out[i] = _fermat(corr[i], w[i], kind, lam, theta)
    return out


@njit(cache=True)
def _penalty_sum(w, kind, lam, theta):
    total = 0.0
    for i in range(w.shape[0]):
        if w[i] != 0.0:
            total += _value(abs(w[i]), kind, lam, theta)
    return total


@dataclass(frozen=True)
class Penalty:
    """Regularizer r_lambda(|w|) with strength ``lam`` and shape ``theta``.

    Parameters
    ----------
    kind : {'logsum', 'mcp', 'scad'}
    lam : float
        Regularization strength, must be positive.
    theta : float
        Shape parameter. Must exceed 0 for log-sum, 1 for MCP and 2 for SCAD.
    """

    kind: str
    lam: float
    theta: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown penalty {self.kind!r}, expected one of {sorted(KINDS)}")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        bound = {"logsum": 0.0, "mcp": 1.0, "scad": 2.0}[self.kind]
        if not (np.isfinite(self.theta) and self.theta > bound):
            raise ValueError(
                f"theta must exceed {bound} for {self.kind}, got {self.theta}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def code(self):
        return KINDS[self.kind]

    @property
    def args(self):
        """Positional ``(kind, lam, theta)`` tuple for the compiled kernels."""
        return self.code, self.lam, self.theta

    @property
    def threshold(self):
        """Zero threshold r'(0): lam / theta for log-sum, lam otherwise."""
        return _deriv(0.0, *self.args)

    def value(self, w):
        """Penalty value r(|w|), elementwise."""
        if np.ndim(w) == 0:
            return _value(abs(float(w)), *self.args)
        w = np.asarray(w, dtype=float)
        return _value_arr(w.ravel(), *self.args).reshape(w.shape)

    def deriv(self, w):
        """Derivative r'(|w|), elementwise."""
        if np.ndim(w) == 0:
            return _deriv(abs(float(w)), *self.args)
        w = np.asarray(w, dtype=float)
        return _deriv_arr(w.ravel(), *self.args).reshape(w.shape)

    def prox(self, v, step):
        """Proximal operator of ``step * r``, elementwise."""
        if step <= 0:
            raise ValueError(f"prox step must be positive, got {step}")
        if np.ndim(v) == 0:
            return _prox(float(v), float(step), *self.args)
        v = np.asarray(v, dtype=float)
        return _prox_arr(v.ravel(), float(step), *self.args).reshape(v.shape)

    def fermat_violation(self, corr, w):
        """Distance of ``corr = x_j^T res`` to the subdifferential at ``w``."""
        if np.ndim(corr) == 0 and np.ndim(w) == 0:
            return _fermat(float(corr), float(w), *self.args)
        corr, w = np.broadcast_arrays(np.asarray(corr, dtype=float),
                                      np.asarray(w, dtype=float))
        out = _fermat_arr(np.ascontiguousarray(corr).ravel(),
                          np.ascontiguousarray(w).ravel(), *self.args)
        return out.reshape(corr.shape)

    def value_change(self, w, w_new):
        """sum_j r(|w_new_j|) - r(|w_j|), accurate when the two are close."""
        return _value_change_sum(np.asarray(w, dtype=float).ravel(),
                                 np.asarray(w_new, dtype=float).ravel(), *self.args)

    def total(self, w):
        """Sum of r(|w_j|) over a coefficient vector."""
        return _penalty_sum(np.asarray(w, dtype=float).ravel(), *self.args)


def penalty_value(w_abs, params):
    if np.any(np.asarray(w_abs) < 0):
        raise ValueError("penalty_value expects non-negative input")
    return params.value(w_abs)


def penalty_deriv(w_abs, params):
    if np.any(np.asarray(w_abs) < 0):
        raise ValueError("penalty_deriv expects non-negative input")
    return params.deriv(w_abs)


def prox_1d(v, step, params):
    return params.prox(v, step)


def fermat_violation(correlation, w_j, params):
    return params.fermat_violation(correlation, w_j)
