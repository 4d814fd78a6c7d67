"""LIBSVM parsing, uniform sampling and lambda_max.

Rows are kept as ``SparseRow`` objects (0-based indices) and mirrored in a
CSR matrix for the vectorised full-data passes (lambda_max, reference
solvers, full-data screening).
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse


class LibsvmParseError(ValueError):
    """Raised on malformed LIBSVM input; carries the 1-based line number."""

    def __init__(self, lineno, msg):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class SparseRow:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d and of equal length")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly ascending")
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError("index out of range for dim=%d" % self.dim)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def nnz(self):
        return self.indices.size

    def dot(self, beta):
        return float(np.dot(self.values, beta[self.indices]))

    def to_dense(self):
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


@dataclass(frozen=True)
class Dataset:
    """Samples ``x_i`` with labels ``y_i``; stands in for the distribution."""

    rows: tuple
    labels: np.ndarray
    n: int

    def __post_init__(self):
        rows = tuple(self.rows)
        labels = np.asarray(self.labels, dtype=float).reshape(-1)
        if len(rows) != labels.size:
            raise ValueError("got %d rows but %d labels" % (len(rows), labels.size))
        for r in rows:
            if r.dim != self.n:
                raise ValueError("row dim %d != n=%d" % (r.dim, self.n))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self):
        return len(self.rows)

    @cached_property
    def X(self):
        """CSR matrix of shape (m, n)."""
        indptr = np.zeros(self.m + 1, dtype=np.int64)
        if self.m:
            indptr[1:] = np.cumsum([r.nnz for r in self.rows])
            indices = np.concatenate([r.indices for r in self.rows])
            data = np.concatenate([r.values for r in self.rows])
        else:
            indices = np.zeros(0, dtype=np.int64)
            data = np.zeros(0)
        return sparse.csr_matrix((data, indices, indptr), shape=(self.m, self.n))

    @classmethod
    def from_dense(cls, X, y):
        X = np.asarray(X, dtype=float)
        m, n = X.shape
        rows = []
        for i in range(m):
            idx = np.flatnonzero(X[i])
            rows.append(SparseRow(idx, X[i, idx], n))
        return cls(tuple(rows), np.asarray(y, dtype=float), n)

    @classmethod
    def from_csr(cls, X, y):
        X = sparse.csr_matrix(X)
        X.sort_indices()
        rows = tuple(
            SparseRow(X.indices[X.indptr[i]:X.indptr[i + 1]],
                      X.data[X.indptr[i]:X.indptr[i + 1]], X.shape[1])
            for i in range(X.shape[0])
        )
        return cls(rows, np.asarray(y, dtype=float), X.shape[1])

    def check_binary_labels(self):
        bad = ~np.isin(self.labels, (-1.0, 1.0))
        if np.any(bad):
            raise ValueError("classification loss needs labels in {-1, +1}; "
                             "first offending label %r" % self.labels[bad][0])


def parse_libsvm(text, n_override=None):
    """Parse LIBSVM text (``label idx:val ...``, 1-based ascending indices).

    ``text`` may be ``str`` or ``bytes``. ``n_override`` widens the feature
    count beyond the largest index present; it may not shrink it.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    parsed = []
    max_index = 0
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmParseError(lineno, "bad label %r" % tokens[0]) from None
        idx, val = [], []
        prev = 0
        for tok in tokens[1:]:
            head, sep, tail = tok.partition(":")
            if not sep:
                raise LibsvmParseError(lineno, "malformed token %r" % tok)
            try:
                j = int(head)
                v = float(tail)
            except ValueError:
                raise LibsvmParseError(lineno, "malformed token %r" % tok) from None
            if j < 1:
                raise LibsvmParseError(lineno, "index %d < 1" % j)
            if j <= prev:
                raise LibsvmParseError(lineno, "indices not ascending at %r" % tok)
            prev = j
            idx.append(j - 1)
            val.append(v)
        max_index = max(max_index, prev)
        parsed.append((label, idx, val))

    n = max_index
    if n_override is not None:
        if n_override < max_index:
            raise ValueError("n_override=%d smaller than largest index %d"
                             % (n_override, max_index))
        n = n_override
    rows = tuple(SparseRow(np.array(i, dtype=np.int64), np.array(v), n)
                 for _, i, v in parsed)
    return Dataset(rows, np.array([p[0] for p in parsed]), n)


def load_libsvm(path, n_override=None):
    with open(os.fspath(path), "rb") as fh:
        return parse_libsvm(fh.read(), n_override=n_override)


def to_libsvm(data):
    """Serialise back to LIBSVM text (1-based indices, shortest round-trip floats)."""
    lines = []
    for row, y in zip(data.rows, data.labels):
        label = "%d" % y if float(y).is_integer() else repr(float(y))
        feats = " ".join("%d:%r" % (j + 1, float(v)) for j, v in zip(row.indices, row.values))
        lines.append((label + " " + feats).rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def normalize_maxabs(data):
    """Scale each feature by its max absolute value (all-zero features untouched)."""
    X = data.X.tocsc(copy=True)
    scale = np.asarray(abs(X).max(axis=0).todense()).ravel()
    scale[scale == 0] = 1.0
    X = sparse.csr_matrix(data.X @ sparse.diags(1.0 / scale))
    return Dataset.from_csr(X, data.labels)


@dataclass
class SampleStream:
    """Uniform sampling with replacement from a dataset.

    Indices are drawn in blocks from a PCG64 generator, so a given
    ``(seed, dataset)`` pair always yields the same sequence.
    """

    data: Dataset
    seed: int = 0
    block: int = 4096
    count: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)
    _buf: np.ndarray = field(init=False, repr=False)
    _pos: int = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = np.random.Generator(np.random.PCG64(self.seed))
        self._buf = np.zeros(0, dtype=np.int64)
        self._pos = 0

    def draw_index(self):
        if self.data.m == 0:
            raise ValueError("cannot sample from an empty dataset")
        if self._pos == self._buf.size:
            self._buf = self._rng.integers(0, self.data.m, size=self.block)
            self._pos = 0
        i = int(self._buf[self._pos])
        self._pos += 1
        self.count += 1
        return i

    def sample(self):
        i = self.draw_index()
        return self.data.rows[i], float(self.data.labels[i])


def lambda_max(data, loss, reg):
    """Smallest lambda for which beta = 0 is optimal.

    Zero is optimal iff ``-(1/m) sum_i f'(0; y_i) x_i`` lies in
    ``lambda * dOmega(0)``, i.e. iff its dual norm is at most lambda.
    """
    if data.m == 0:
        raise ValueError("lambda_max of an empty dataset")
    theta0 = loss.deriv(np.zeros(data.m), data.labels)
    grad = data.X.T @ theta0 / data.m
    return float(reg.omega_dual(grad))


def make_synthetic(m, n, k, noise=0.01, seed=0, loss="squared", rho=0.0):
    """Random sparse regression/classification instance.

    Gaussian design (optionally Toeplitz-correlated with parameter ``rho``),
    columns scaled to unit Euclidean norm, ``k`` nonzero true coefficients
    of magnitude in [1, 2] with random signs. For ``loss="squared"`` the
    response is ``X b + noise * N(0, 1)``; otherwise labels are the signs
    of that response.
    Returns ``(Dataset, true_coef)``.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, n))
    if rho:
        # AR(1) columns give Toeplitz covariance rho^|i-j|
        for j in range(1, n):
            X[:, j] = rho * X[:, j - 1] + np.sqrt(1 - rho ** 2) * X[:, j]
    X /= np.linalg.norm(X, axis=0)
    coef = np.zeros(n)
    support = rng.choice(n, size=k, replace=False)
    coef[support] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(1.0, 2.0, size=k)
    y = X @ coef + noise * rng.standard_normal(m)
    if loss != "squared":
        y = np.where(y >= 0, 1.0, -1.0)
    return Dataset.from_dense(X, y), coef
