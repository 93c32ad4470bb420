import csv

import numpy as np
import pytest

from fireworks.data import SparseSolution, generate_toy, lambda_max
from fireworks.inner import max_violation
from fireworks.metrics import (ROW_FIELDS, BenchmarkReport, BenchmarkSpec, SolverOptions,
                               default_ratios, run_benchmark, run_lambda_grid, run_solver,
                               support_f_measure)
from fireworks.penalty import Penalty

TOY = {"n": 30, "d": 120, "p": 5, "sigma": 0.01}


def sol(dim, idx):
    return SparseSolution(dim, idx, np.ones(len(idx)))


class TestFMeasure:
    def test_examples(self):
        assert support_f_measure(sol(6, [1, 2, 3]), sol(6, [1, 2, 3])) == 1.0
        assert support_f_measure(sol(6, [1, 2, 3]), sol(6, [2, 3, 4])) == pytest.approx(2 / 3)
        assert support_f_measure(sol(6, []), sol(6, [2])) == 0.0
        assert support_f_measure(sol(6, [2]), sol(6, [])) == 0.0
        assert support_f_measure(sol(6, []), sol(6, [])) == 1.0
        assert support_f_measure(sol(6, [0]), sol(6, [5])) == 0.0

    def test_asymmetric(self):
        # P = 1/2, R = 1 -> F = 2/3
        assert support_f_measure(sol(5, [0, 1]), sol(5, [0])) == pytest.approx(2 / 3)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            support_f_measure(sol(5, [0]), sol(6, [0]))


class TestRunSolver:
    @pytest.mark.parametrize("name", ["gist", "bcd", "fireworks-gist", "fireworks-bcd",
                                      "maxvc-gist", "maxvc-bcd", "mm-bcd"])
    def test_every_solver_certifies(self, name):
        ds = generate_toy(30, 120, 5, 0.01, seed=1)
        pen = Penalty("logsum", 0.1 * lambda_max(ds.X, ds.y), 1.0)
        rep = run_solver(name, ds, pen, 1e-6)
        assert rep.converged, name
        assert max_violation(ds.X, ds.y, rep.solution, pen) <= 1e-6
        assert rep.solver == name

    def test_unknown(self):
        ds = generate_toy(5, 10, 1, seed=0)
        with pytest.raises(ValueError, match="unknown solver"):
            run_solver("lbfgs", ds, Penalty("mcp", 1.0, 3.0), 1e-5)


class TestBenchmark:
    def test_one_row_std_zero(self):
        report = run_benchmark(BenchmarkSpec(TOY, lam_ratio=0.1))
        assert len(report.rows) == 1
        agg = report.aggregates()[0]
        assert agg["seconds_std"] == 0.0 and agg["repetitions"] == 1
        row = report.rows[0]
        assert set(row) == set(ROW_FIELDS)
        assert 0.0 <= row["f_measure"] <= 1.0

    def test_row_count_and_shared_data(self):
        spec = BenchmarkSpec(TOY, penalty="mcp", theta=3.0, lam_ratio=0.1,
                             solvers=["fireworks-bcd", "bcd"], tols=[1e-3, 1e-5],
                             repetitions=2, seed_base=4)
        report = run_benchmark(spec)
        assert len(report.rows) == 2 * 2 * 2
        for rep in range(2):
            rows = [r for r in report.rows if r["rep"] == rep]
            assert {r["lam"] for r in rows} == {rows[0]["lam"]}
            assert {r["seed"] for r in rows} == {4 + rep}
        assert report.rows[0]["lam"] != report.rows[-1]["lam"]

    def test_deterministic_except_time(self):
        spec = BenchmarkSpec(TOY, lam_ratio=0.1, solvers=["fireworks-gist", "mm-bcd"])
        a, b = run_benchmark(spec).rows, run_benchmark(spec).rows
        for ra, rb in zip(a, b):
            ra, rb = dict(ra), dict(rb)
            ra.pop("seconds"), rb.pop("seconds")
            assert ra == rb

    def test_support_size_exact(self):
        ds = generate_toy(30, 120, 5, 0.01, seed=2)
        pen = Penalty("logsum", 0.1 * lambda_max(ds.X, ds.y), 1.0)
        report = run_benchmark(BenchmarkSpec(ds, lam=pen.lam))
        expect = run_solver("fireworks-bcd", ds, pen, 1e-5).solution.nnz
        assert report.rows[0]["support_size"] == expect
        assert report.rows[0]["seed"] is None

    @pytest.mark.parametrize("kwargs", [{}, {"lam_ratio": 0.1, "lam": 1.0},
                                        {"lam_ratio": 0.1, "repetitions": 0},
                                        {"lam_ratio": 0.1, "solvers": ["nope"]}])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            BenchmarkSpec(TOY, **kwargs)

    def test_serialization_roundtrip(self, tmp_path):
        report = run_benchmark(BenchmarkSpec(TOY, lam_ratio=0.1, solvers=["bcd", "mm-bcd"]))
        report.write_json(tmp_path / "r.json")
        back = BenchmarkReport.read_json(tmp_path / "r.json")
        assert back.rows == report.rows
        assert back.aggregates() == report.aggregates()
        report.write_csv(tmp_path / "r.csv")
        with open(tmp_path / "r.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert [float(r["objective"]) for r in rows] == [r["objective"] for r in report.rows]


class TestLambdaGrid:
    def test_default_ratios(self):
        r = default_ratios()
        assert len(r) == 10 and r[0] == pytest.approx(0.6) and r[-1] == pytest.approx(0.01)
        assert all(b < a for a, b in zip(r, r[1:]))

    def test_single_ratio_equals_benchmark_cell(self):
        ds = generate_toy(30, 120, 5, 0.01, seed=3)
        grid = run_lambda_grid(ds, "logsum", 1.0, [0.1], "fireworks-bcd", 1e-5).rows[0]
        cell = run_benchmark(BenchmarkSpec(ds, lam_ratio=0.1)).rows[0]
        for key in ("lam", "support_size", "objective", "final_violation", "converged",
                    "inner_iters"):
            assert grid[key] == cell[key]

    def test_path_certifies_and_warm_start_helps(self):
        ds = generate_toy(40, 200, 8, 0.01, seed=4)
        opts = SolverOptions()
        warm = run_lambda_grid(ds, "logsum", 1.0, default_ratios(6), "fireworks-bcd",
                               1e-5, opts)
        cold = run_lambda_grid(ds, "logsum", 1.0, default_ratios(6), "fireworks-bcd",
                               1e-5, opts, warm_start=False)
        assert all(r["converged"] for r in warm.rows)
        assert all(r["final_violation"] <= 1e-5 for r in warm.rows)
        assert warm.total_inner_iters <= cold.total_inner_iters

    def test_rejects_ascending(self):
        ds = generate_toy(10, 20, 2, seed=0)
        with pytest.raises(ValueError, match="descending"):
            run_lambda_grid(ds, ratios=[0.1, 0.5])
