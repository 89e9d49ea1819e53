"""Immutable sparse operators and vector validation.

Everything downstream (QP solvers, the staggered-grid Stokes module) works in
terms of :class:`SparseOperator` and plain 1-D numpy arrays.  Operators are
frozen after assembly so they can be shared freely between threads.
"""

import numpy as np
from scipy import sparse as _sp


def as_vector(x, length=None, name="vector"):
    """Coerce ``x`` to a finite 1-D float64 array.

    Raises ValueError on wrong dimensionality, a length mismatch, or any
    NaN/Inf entry.  Non-finite values are rejected at every public entry
    point so they can never propagate silently through a solve.
    """
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ValueError(
            f"{name} has length {v.shape[0]}, expected {length}")
    if v.size and not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


class SparseOperator:
    """A real matrix stored in compressed-sparse-row layout.

    Assembly accepts unordered (row, col, value) triples; duplicates are
    summed and column indices sorted, so the stored layout is canonical
    regardless of input order.  ``symmetric=True`` asserts exact pairwise
    equality value(i, j) == value(j, i) and is verified at construction.

    Instances are immutable: the underlying CSR buffers are marked
    read-only once built.
    """

    __slots__ = ("_csr", "_symmetric")

    def __init__(self, matrix, symmetric=False):
        csr = _sp.csr_array(matrix, dtype=float)
        csr.sum_duplicates()
        csr.sort_indices()
        if csr.nnz and not np.all(np.isfinite(csr.data)):
            raise ValueError("operator contains non-finite entries")
        if symmetric:
            if csr.shape[0] != csr.shape[1]:
                raise ValueError("symmetric operator must be square")
            diff = (csr - csr.T).tocoo()
            if diff.nnz and np.any(diff.data != 0.0):
                raise ValueError(
                    "symmetry flag set but value(i,j) != value(j,i)")
        for buf in (csr.data, csr.indices, csr.indptr):
            buf.flags.writeable = False
        self._csr = csr
        self._symmetric = bool(symmetric)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_triples(cls, nrows, ncols, rows, cols, values, symmetric=False):
        """Assemble from parallel row/col/value sequences (duplicates summed)."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols, values must have matching lengths")
        coo = _sp.coo_array((values, (rows, cols)), shape=(nrows, ncols))
        return cls(coo, symmetric=symmetric)

    @classmethod
    def from_dense(cls, array, symmetric=False):
        arr = np.asarray(array, dtype=float)
        if arr.ndim != 2:
            raise ValueError("dense input must be 2-D")
        return cls(_sp.csr_array(arr), symmetric=symmetric)

    @classmethod
    def identity(cls, n):
        return cls(_sp.identity(n, format="csr"), symmetric=True)

    @classmethod
    def diagonal(cls, values):
        values = as_vector(values, name="diagonal")
        return cls(_sp.diags_array(values, format="csr"), symmetric=True)

    # -- shape -------------------------------------------------------------

    @property
    def nrows(self):
        return self._csr.shape[0]

    @property
    def ncols(self):
        return self._csr.shape[1]

    @property
    def shape(self):
        return self._csr.shape

    @property
    def nnz(self):
        return self._csr.nnz

    @property
    def symmetric(self):
        return self._symmetric

    @property
    def csr(self):
        """The underlying (read-only) scipy CSR array."""
        return self._csr

    # -- operations --------------------------------------------------------

    def apply(self, x):
        """Return ``self @ x`` for a 1-D vector ``x`` (exact linearity)."""
        x = as_vector(x, length=self.ncols, name="x")
        return self._csr @ x

    def transpose(self):
        return SparseOperator(self._csr.T.tocsr(), symmetric=self._symmetric)

    def toarray(self):
        return self._csr.toarray()

    def triples(self):
        """Canonical (rows, cols, values) triples in row-major order."""
        coo = self._csr.tocoo()
        return coo.row.copy(), coo.col.copy(), coo.data.copy()

    def frobenius_norm(self):
        return float(np.sqrt(np.sum(self._csr.data ** 2)))

    def __matmul__(self, x):
        return self.apply(x)

    def __repr__(self):
        tag = "symmetric" if self._symmetric else "general"
        return (f"SparseOperator({self.nrows}x{self.ncols}, "
                f"nnz={self.nnz}, {tag})")
