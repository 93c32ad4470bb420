import math

import numpy as np
import pytest
from scipy import sparse

from fireworks.data import DesignMatrix, SparseSolution, make_rng
from fireworks.inner import (InnerConfig, NumericalError, bcd_solve, gist_solve,
                             max_violation, objective)
from fireworks.penalty import Penalty

ROOT = 1 + math.sqrt(3.0)
LOGSUM = Penalty("logsum", 1.0, 1.0)
SOLVERS = [gist_solve, bcd_solve]
ONE = DesignMatrix(np.array([[1.0]]))


def random_instance(seed, n=30, d=10):
    rng = make_rng(seed)
    X = rng.standard_normal((n, d))
    y = X[:, :3] @ np.array([2.0, -1.5, 1.0]) + 0.1 * rng.standard_normal(n)
    return DesignMatrix(X), y


class TestObjective:
    def test_examples(self):
        y = np.array([3.0, -4.0])
        X = DesignMatrix(np.eye(2))
        assert objective(X, y, np.zeros(2), LOGSUM) == 12.5
        assert objective(X, np.zeros(2), np.zeros(2), LOGSUM) == 0.0
        assert objective(ONE, np.array([3.0]), np.array([1.0]), LOGSUM) == \
            pytest.approx(2.0 + math.log(2.0))
        assert objective(ONE, np.array([3.0]), np.array([1.0]), LOGSUM) == \
            pytest.approx(2.693147, abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            objective(ONE, np.array([3.0]), np.zeros(2), LOGSUM)


class TestMaxViolation:
    def test_examples(self):
        X = DesignMatrix(np.eye(2))
        y = np.array([3.0, -4.0])
        assert max_violation(X, y, np.zeros(2), Penalty("logsum", 5.0, 1.0)) == 0.0
        assert max_violation(ONE, np.array([3.0]), np.array([ROOT]), LOGSUM) <= 1e-9
        assert max_violation(X, y, np.zeros(2), LOGSUM) == 3.0

    def test_scope_and_sparse_input(self):
        X = DesignMatrix(np.eye(2))
        y = np.array([3.0, -4.0])
        assert max_violation(X, y, SparseSolution(2, [], []), LOGSUM, scope=[0]) == 2.0
        assert max_violation(X, y, np.zeros(2), LOGSUM, scope=[]) == 0.0


@pytest.mark.parametrize("solve", SOLVERS)
class TestExamples:
    def test_one_dimensional(self, solve):
        res = solve(ONE, np.array([3.0]), LOGSUM, cfg=InnerConfig(tol=1e-8))
        assert res.converged
        assert res.w[0] == pytest.approx(2.7320508, abs=1e-7)
        # grid oracle on the 1-D objective
        grid = np.linspace(0, 4, 400001)
        best = grid[np.argmin(0.5 * (3 - grid) ** 2 + np.log1p(grid))]
        assert res.w[0] == pytest.approx(best, abs=1e-4)

    def test_orthogonal_mcp(self, solve):
        res = solve(DesignMatrix(np.eye(2)), np.array([3.0, 0.2]), Penalty("mcp", 1.0, 2.0),
                    cfg=InnerConfig(tol=1e-10))
        np.testing.assert_allclose(res.w, [3.0, 0.0], atol=1e-10)

    def test_below_threshold(self, solve):
        res = solve(DesignMatrix(np.eye(2)), np.array([0.5, 0.5]), LOGSUM)
        np.testing.assert_array_equal(res.w, [0.0, 0.0])
        assert res.iterations == 0

    def test_stationary_warm_start(self, solve):
        res = solve(ONE, np.array([3.0]), LOGSUM, w0=np.array([ROOT]),
                    cfg=InnerConfig(tol=1e-8))
        assert res.iterations <= 1
        assert res.w[0] == pytest.approx(ROOT, abs=1e-12)

    def test_max_iter_flags_not_converged(self, solve):
        X, y = random_instance(1)
        res = solve(X, y, LOGSUM, cfg=InnerConfig(tol=1e-12, max_iter=1))
        assert not res.converged and res.iterations == 1

    def test_bad_warm_start(self, solve):
        with pytest.raises(ValueError):
            solve(ONE, np.array([3.0]), LOGSUM, w0=np.array([np.nan]))

    def test_objective_non_increasing(self, solve):
        X, y = random_instance(2)
        res = solve(X, y, Penalty("scad", 0.5, 3.7), cfg=InnerConfig(tol=1e-9, record=True))
        f = res.history["objective"]
        assert f.size >= 2
        assert np.all(np.diff(f) <= 1e-12 * (1 + np.abs(f[:-1])))


class TestCrossSolver:
    @pytest.mark.parametrize("pen", [LOGSUM, Penalty("mcp", 2.0, 3.0), Penalty("scad", 2.0, 3.7),
                                     Penalty("logsum", 0.5, 0.1)])
    def test_agree(self, pen):
        X, y = random_instance(7)
        cfg = InnerConfig(tol=1e-8, max_iter=100_000)
        a = gist_solve(X, y, pen, cfg=cfg)
        b = bcd_solve(X, y, pen, cfg=cfg)
        assert a.converged and b.converged
        assert max_violation(X, y, a.w, pen) <= 1e-8
        assert max_violation(X, y, b.w, pen) <= 1e-8
        assert a.objective == pytest.approx(b.objective, abs=1e-6)

    @pytest.mark.parametrize("solve", SOLVERS)
    def test_sparse_matches_dense(self, solve):
        rng = make_rng(11)
        A = rng.standard_normal((25, 12)) * (rng.random((25, 12)) < 0.4)
        A[0] += 1.0  # no empty columns
        y = rng.standard_normal(25) * 3
        cfg = InnerConfig(tol=1e-10)
        pen = Penalty("mcp", 0.8, 3.0)
        a = solve(DesignMatrix(A), y, pen, cfg=cfg)
        b = solve(DesignMatrix(sparse.csc_matrix(A)), y, pen, cfg=cfg)
        np.testing.assert_allclose(a.w, b.w, atol=1e-8)


def test_gist_sufficient_decrease_from_trace():
    X, y = random_instance(3)
    cfg = InnerConfig(tol=1e-10, record=True)
    for pen in (LOGSUM, Penalty("mcp", 2.0, 3.0), Penalty("scad", 1.0, 3.7)):
        h = gist_solve(X, y, pen, cfg=cfg).history
        df = np.diff(h["objective"])
        bound = -0.5 * cfg.sigma * h["eta"] * h["step_sq"]
        assert np.all(df <= bound + 1e-12 * (1 + np.abs(h["objective"][:-1])))


def test_bcd_rejects_zero_column():
    with pytest.raises(ValueError):
        bcd_solve(DesignMatrix(np.array([[1.0, 0.0], [0.0, 0.0]])), np.ones(2), LOGSUM)


def test_gist_tolerates_zero_column():
    res = gist_solve(DesignMatrix(np.array([[1.0, 0.0]])), np.array([3.0]), LOGSUM,
                     cfg=InnerConfig(tol=1e-9))
    assert res.w[1] == 0.0 and res.w[0] == pytest.approx(ROOT, abs=1e-8)


def test_non_finite_objective():
    with pytest.raises(NumericalError):
        gist_solve(ONE, np.array([np.inf]), LOGSUM)


@pytest.mark.parametrize("kwargs", [{"sigma": 0}, {"sigma": 1}, {"step_shrink": 1.5},
                                    {"step_init": -1.0}, {"tol": 0}, {"max_iter": -1}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        InnerConfig(**kwargs)
