"""Design matrices, datasets, file loaders and the synthetic toy generator."""
import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


class DataFormatError(ValueError):
    """Malformed input file. ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DesignMatrix:
    """Immutable n x d design matrix with cached column norms.

    Dense input is stored column-major, sparse input as CSC with sorted,
    duplicate-free row indices. Every hot loop of the solvers walks columns.
    """

    def __init__(self, X, col_norms=None):
        if sparse.issparse(X):
            X = sparse.csc_matrix(X, dtype=np.float64, copy=True)
            X.sum_duplicates()
            X.sort_indices()
            X.eliminate_zeros()
        else:
            X = np.asfortranarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
            if X.ndim != 2:
                raise ValueError("design matrix must be two-dimensional")
        self._X = X
        self.n, self.d = X.shape
        if col_norms is None:
            col_norms = self._compute_norms()
        self.col_norms = np.asarray(col_norms, dtype=np.float64)
        self.col_norms.setflags(write=False)

    def _compute_norms(self):
        if self.is_sparse:
            sq = np.asarray(self._X.multiply(self._X).sum(axis=0)).ravel()
            return np.sqrt(sq)
        return np.linalg.norm(self._X, axis=0)

    @property
    def is_sparse(self):
        return sparse.issparse(self._X)

    @property
    def shape(self):
        return self.n, self.d

    @property
    def data(self):
        """Underlying ndarray or ``scipy.sparse.csc_matrix``; do not mutate."""
        return self._X

    def correlations(self, r):
        """Return X^T r."""
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.n,):
            raise ValueError(f"vector of length {self.n} expected, got {r.shape}")
        return np.asarray(self._X.T @ r).ravel()

    def matvec(self, w):
        """Return X w."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.d,):
            raise ValueError(f"vector of length {self.d} expected, got {w.shape}")
        return np.asarray(self._X @ w).ravel()

    def subset(self, cols):
        """Columns ``cols`` as a new DesignMatrix (norms are sliced, not recomputed)."""
        cols = np.asarray(cols, dtype=np.intp)
        if self.is_sparse:
            sub = self._X[:, cols]
        else:
            sub = np.asfortranarray(self._X[:, cols])
        return DesignMatrix(sub, col_norms=self.col_norms[cols])

    def column(self, j):
        if self.is_sparse:
            return self._X[:, j].toarray().ravel()
        return self._X[:, j].copy()

    def toarray(self):
        if self.is_sparse:
            return self._X.toarray()
        return np.array(self._X)

    def spectral_norm(self, tol=1e-10, max_iter=10_000, seed=0):
        """Largest singular value by power iteration on X^T X."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.d)
        v /= np.linalg.norm(v)
        sigma = 0.0
        for _ in range(max_iter):
            u = self.correlations(self.matvec(v))
            nrm = np.linalg.norm(u)
            if nrm == 0.0:
                return 0.0
            v = u / nrm
            new = np.sqrt(nrm)
            if abs(new - sigma) <= tol * max(new, 1.0):
                return new
            sigma = new
        return sigma


@dataclass(frozen=True, eq=False)
class SparseSolution:
    """Coefficient vector of dimension ``dim`` stored as sorted (index, value) pairs."""

    dim: int
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp).ravel()
        val = np.asarray(self.values, dtype=np.float64).ravel()
        if idx.shape != val.shape:
            raise ValueError("indices and values must have the same length")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError("index out of range")
            if np.any(val == 0):
                raise ValueError("stored values must be nonzero")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, w):
        w = np.asarray(w, dtype=np.float64).ravel()
        idx = np.flatnonzero(w)
        return cls(w.size, idx, w[idx])

    def to_dense(self):
        w = np.zeros(self.dim)
        w[self.indices] = self.values
        return w

    @property
    def nnz(self):
        return int(self.indices.size)

    def support(self):
        return set(self.indices.tolist())

    def __eq__(self, other):
        if not isinstance(other, SparseSolution):
            return NotImplemented
        return (self.dim == other.dim
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class Dataset:
    X: DesignMatrix
    y: np.ndarray
    w_true: SparseSolution = None

    def __post_init__(self):
        if not isinstance(self.X, DesignMatrix):
            object.__setattr__(self, "X", DesignMatrix(self.X))
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if y.shape[0] != self.X.n:
            raise ValueError(
                f"target has {y.shape[0]} entries but X has {self.X.n} rows")
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.n

    @property
    def d(self):
        return self.X.d


def correlations(X, r):
    return X.correlations(r)


def lambda_max(X, y):
    """max_j |x_j^T y|; zero when X or y vanish."""
    if X.d == 0:
        return 0.0
    return float(np.max(np.abs(X.correlations(y))))


def load_svmlight(path, n_features=None):
    """Read ``<label> <idx>:<val> ...`` lines with 1-based, increasing indices.

    Blank lines and ``#`` comments are ignored, as are ``qid:`` tokens.
    The result is stored in CSC format.
    """
    labels, rows, cols, vals = [], [], [], []
    max_idx = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise DataFormatError(f"bad label {tokens[0]!r}", lineno) from None
            row = len(labels) - 1
            prev = 0
            for tok in tokens[1:]:
                if tok.startswith("qid:"):
                    continue
                key, sep, value = tok.partition(":")
                if not sep:
                    raise DataFormatError(f"expected idx:val, got {tok!r}", lineno)
                try:
                    idx = int(key)
                    val = float(value)
                except ValueError:
                    raise DataFormatError(f"bad feature {tok!r}", lineno) from None
                if idx < 1:
                    raise DataFormatError(f"feature index {idx} is not 1-based", lineno)
                if idx <= prev:
                    raise DataFormatError(
                        f"non-increasing feature index {idx} after {prev}", lineno)
                prev = idx
                max_idx = max(max_idx, idx)
                rows.append(row)
                cols.append(idx - 1)
                vals.append(val)
    if not labels:
        raise DataFormatError(f"{path}: empty file, no samples")
    d = max_idx if n_features is None else int(n_features)
    if max_idx > d:
        raise DataFormatError(f"feature index {max_idx} exceeds n_features={d}")
    X = sparse.csc_matrix((vals, (rows, cols)), shape=(len(labels), d))
    return Dataset(DesignMatrix(X), np.array(labels))


def write_svmlight(path, X, y):
    """Write ``X`` (DesignMatrix) and ``y`` with 1-based indices, zeros omitted."""
    Xr = sparse.csr_matrix(X.data)
    Xr.sort_indices()
    with open(path, "w") as fh:
        for i in range(X.n):
            lo, hi = Xr.indptr[i], Xr.indptr[i + 1]
            feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in
                             zip(Xr.indices[lo:hi], Xr.data[lo:hi]) if v != 0)
            fh.write(f"{float(y[i])!r} {feats}".rstrip() + "\n")


def load_csv_dense(path, target_column, header=False):
    """Numeric CSV without header (unless ``header``); one column is the target."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise DataFormatError(
                    f"ragged row: {len(rec)} cells, expected {width}", lineno)
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                raise DataFormatError("non-numeric cell", lineno) from None
    if not rows:
        raise DataFormatError(f"{path}: empty file, no samples")
    arr = np.array(rows)
    if not -width <= target_column < width:
        raise ValueError(f"target column {target_column} out of range for {width} columns")
    target_column %= width
    y = arr[:, target_column]
    X = np.delete(arr, target_column, axis=1)
    return Dataset(DesignMatrix(X), y)


def make_rng(seed):
    """Counter-based Philox stream; normal variates use numpy's ziggurat."""
    return np.random.Generator(np.random.Philox(int(seed)))


def generate_toy(n, d, p, noise_sigma=0.01, seed=0):
    """Gaussian design with a p-sparse ground truth.

    Nonzero coefficients are standard normal pushed away from zero by 0.1,
    and y = X w_true + noise_sigma * e.
    """
    if p > d:
        raise ValueError(f"p={p} exceeds d={d}")
    if p < 0 or n < 1 or d < 1:
        raise ValueError("n, d must be positive and p non-negative")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    rng = make_rng(seed)
    X = rng.standard_normal((n, d))
    support = np.sort(rng.choice(d, size=p, replace=False))
    vals = rng.standard_normal(p)
    vals = vals + 0.1 * np.sign(vals)
    w = np.zeros(d)
    w[support] = vals
    y = X @ w
    if noise_sigma > 0:
        y = y + noise_sigma * rng.standard_normal(n)
    return Dataset(DesignMatrix(X), y, SparseSolution.from_dense(w))
