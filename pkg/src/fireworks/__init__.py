"""Working-set solvers for least squares with non-convex sparse penalties."""
from .baseline import MMConfig, mm_solve, weighted_lasso_bcd
from .data import (DataFormatError, Dataset, DesignMatrix, SparseSolution, generate_toy,
                   lambda_max, load_csv_dense, load_svmlight, write_svmlight)
from .geometry import SlabSystem, max_feasible_step, ratio_test
from .inner import InnerConfig, bcd_solve, gist_solve, max_violation
from .metrics import (BenchmarkReport, BenchmarkSpec, run_benchmark, run_lambda_grid,
                      run_solver, support_f_measure)
from .penalty import Penalty
from .report import SolveReport
from .wset import OuterConfig, fireworks_solve, full_solve, maxvc_solve

__version__ = "0.1.0"
