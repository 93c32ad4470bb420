"""Solve reports and their JSON / svmlight-style serialization.

Trace documents have the layout::

    {"schema": "fireworks.trace/1", "solver": ..., "converged": ...,
     "final_violation": ..., "objective": ..., "support_size": ...,
     "records": [{"iter", "objective", "alpha", "set_size",
                  "max_violation", "inner_iters", "inner_converged",
                  "elapsed_seconds"}, ...]}

``alpha`` is null for solvers without a pseudo-residual. ``elapsed_seconds``
is cumulative wall time and the only non-deterministic field.
"""
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import SparseSolution

TRACE_SCHEMA = "fireworks.trace/1"
TIMING_FIELDS = ("elapsed_seconds",)


@dataclass
class IterationRecord:
    iter: int
    objective: float
    alpha: float
    set_size: int
    max_violation: float
    inner_iters: int
    inner_converged: bool
    elapsed_seconds: float


@dataclass
class SolveReport:
    solver: str
    solution: SparseSolution
    converged: bool
    final_violation: float
    objective: float
    iterations: list = field(default_factory=list)
    history: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def support_size(self):
        return self.solution.nnz

    @property
    def total_inner_iters(self):
        return int(sum(rec.inner_iters for rec in self.iterations))

    def to_dict(self, timing=True):
        records = []
        for rec in self.iterations:
            row = asdict(rec)
            if not timing:
                for key in TIMING_FIELDS:
                    row.pop(key)
            records.append(row)
        return {
            "schema": TRACE_SCHEMA,
            "solver": self.solver,
            "converged": bool(self.converged),
            "final_violation": float(self.final_violation),
            "objective": float(self.objective),
            "support_size": self.support_size,
            "records": records,
        }


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_trace(path, report, timing=True):
    with open(path, "w") as fh:
        json.dump(_clean(report.to_dict(timing=timing)), fh, indent=1)
        fh.write("\n")


def read_trace(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"{path}: not a {TRACE_SCHEMA} document")
    return doc


def write_solution(path, solution):
    """One ``idx:value`` line with 1-based indices, after a ``# dim=d`` header."""
    body = " ".join(f"{i + 1}:{v!r}" for i, v in
                    zip(solution.indices.tolist(), solution.values.tolist()))
    with open(path, "w") as fh:
        fh.write(f"# dim={solution.dim}\n{body}\n")


def read_solution(path):
    dim = None
    idx, val = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# dim="):
                dim = int(line[len("# dim="):])
                continue
            for tok in line.split():
                i, v = tok.split(":")
                idx.append(int(i) - 1)
                val.append(float(v))
    if dim is None:
        raise ValueError(f"{path}: missing '# dim=' header")
    return SparseSolution(dim, np.array(idx, dtype=np.intp), np.array(val))
