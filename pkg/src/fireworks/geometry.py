"""Slab constraints |x_j^T a| <= c and the feasible-segment ratio test.

For a threshold c = r'(0), the slab of feature j is C_j = {a : |x_j^T a| <= c}
and its boundary is the pair of hyperplanes x_j^T a = +-c. The intersection of
all slabs is where the residual of a stationary point must live.
"""
from dataclasses import dataclass

import numpy as np


class InfeasiblePointError(ValueError):
    """The pseudo-residual left the slab intersection beyond tolerance."""


class DegenerateColumnError(ValueError):
    """Distance to the slab of an all-zero column was requested."""


def feasibility_tol(threshold):
    return 1e-9 * (1.0 + threshold)


class SlabSystem:
    """Slabs of every column of ``X`` for a common ``threshold``.

    All-zero columns can never be violated (their constraint reads -c <= 0),
    so they are masked out of every distance and ratio computation.
    """

    def __init__(self, X, threshold):
        if not threshold > 0:
            raise ValueError(f"slab threshold must be positive, got {threshold}")
        self.X = X
        self.threshold = float(threshold)
        self.eps = feasibility_tol(self.threshold)
        self.valid = X.col_norms > 0
        self._inv_norms = np.zeros(X.d)
        self._inv_norms[self.valid] = 1.0 / X.col_norms[self.valid]

    @property
    def d(self):
        return self.X.d

    def violations(self, corr):
        """h_j = |x_j^T a| - c for all j, given corr = X^T a."""
        return np.abs(corr) - self.threshold

    def slab_distances(self, corr):
        """dist(a, C_j) for all j; zero for masked columns."""
        return np.maximum(self.violations(corr), 0.0) * self._inv_norms

    def boundary_distances(self, corr):
        """dist(a, C_j^=) for all j; +inf for masked columns."""
        out = np.full(self.d, np.inf)
        v = self.valid
        out[v] = np.abs(np.abs(corr[v]) - self.threshold) * self._inv_norms[v]
        return out

    def _check_column(self, j):
        if not self.valid[j]:
            raise DegenerateColumnError(f"column {j} is identically zero")


def slab_violation(j, a, sys):
    corr = float(sys.X.column(j) @ np.asarray(a, dtype=np.float64))
    return abs(corr) - sys.threshold


def dist_to_slab(j, r, sys):
    sys._check_column(j)
    return max(0.0, slab_violation(j, r, sys)) / sys.X.col_norms[j]


def dist_to_boundary(j, s, sys):
    sys._check_column(j)
    return abs(slab_violation(j, s, sys)) / sys.X.col_norms[j]


@dataclass(frozen=True)
class StepResult:
    """Largest feasible step ``alpha`` and the slab that stops it (if alpha < 1)."""

    alpha: float
    blocking_index: int = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if (self.blocking_index is None) != (self.alpha == 1.0):
            raise ValueError("blocking index is required exactly when alpha < 1")


def ratio_test(corr_r, corr_s, sys, candidates=None):
    """Ratio test on precomputed correlations a = X^T r and b = X^T s.

    Returns the largest alpha in [0, 1] such that |b + alpha (a - b)| <= c for
    every candidate column, with the smallest blocking index on ties. Columns
    with |a| <= c + eps do not block, so alpha = 1 leaves s within eps of C.
    """
    c = sys.threshold
    if candidates is None:
        idx = np.flatnonzero(sys.valid)
    else:
        idx = np.asarray(candidates, dtype=np.intp)
        idx = idx[sys.valid[idx]]
    a = corr_r[idx]
    b = corr_s[idx]
    bad = np.abs(b) > c + sys.eps
    if np.any(bad):
        worst = idx[np.argmax(np.abs(b) - c)]
        raise InfeasiblePointError(
            f"pseudo-residual violates slab {worst} by "
            f"{np.max(np.abs(b)) - c:.3e} > {sys.eps:.3e}")
    # within the feasibility tolerance counts as inside, as for s itself
    out = np.abs(a) > c + sys.eps
    if not np.any(out):
        return StepResult(1.0)
    a, b, sub = a[out], b[out], idx[out]
    denom = a - b
    alphas = np.ones_like(a)
    moving = denom != 0.0
    alphas[moving] = (np.sign(a[moving]) * c - b[moving]) / denom[moving]
    alphas = np.clip(alphas, 0.0, 1.0)
    # ties resolved on the smallest column index
    order = np.argsort(sub, kind="stable")
    k = order[np.argmin(alphas[order])]
    alpha = float(alphas[k])
    if alpha >= 1.0:
        return StepResult(1.0)
    return StepResult(alpha, int(sub[k]))


def max_feasible_step(r, s, sys, candidate_set=None):
    """alpha_k = max{alpha in [0, 1] : alpha r + (1 - alpha) s in C}."""
    return ratio_test(sys.X.correlations(r), sys.X.correlations(s), sys,
                      candidate_set)


def update_pseudo_residual(s, r, step):
    """s_next = alpha r + (1 - alpha) s."""
    if step.alpha == 1.0:
        return np.array(r, dtype=np.float64)
    if step.alpha == 0.0:
        return np.array(s, dtype=np.float64)
    return step.alpha * np.asarray(r) + (1.0 - step.alpha) * np.asarray(s)
