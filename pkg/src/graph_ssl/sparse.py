"""Compressed sparse row matrices, just enough for graph aggregation."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from . import kernels


class CsrMatrix:
    """Immutable CSR matrix of 64-bit floats.

    The transpose is materialized lazily and cached; symmetric matrices
    (the common case here) can share it explicitly via `mark_symmetric`.
    """

    def __init__(self, shape, indptr, indices, data):
        n_rows, n_cols = shape
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        data = np.ascontiguousarray(data, dtype=np.float64)
        if indptr.shape != (n_rows + 1,):
            raise DimensionError(f"indptr length {indptr.shape[0]} != n_rows+1 ({n_rows + 1})")
        if indices.shape != data.shape:
            raise DimensionError("indices and data lengths differ")
        if indices.size and (indices.min() < 0 or indices.max() >= n_cols):
            raise DimensionError("column index out of range")
        self.shape = (int(n_rows), int(n_cols))
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self._transpose = None

    @property
    def nnz(self) -> int:
        return int(self.data.shape[0])

    @classmethod
    def from_coo(cls, shape, rows, cols, values) -> "CsrMatrix":
        """Build from coordinate triplets; duplicates are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size:
            dup = np.zeros(rows.size, dtype=bool)
            dup[1:] = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if dup.any():
                keep = ~dup
                group = np.cumsum(keep) - 1
                summed = np.zeros(keep.sum())
                np.add.at(summed, group, values)
                rows, cols, values = rows[keep], cols[keep], summed
        indptr = np.zeros(shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(shape, indptr, cols, values)

    def mark_symmetric(self) -> "CsrMatrix":
        self._transpose = self
        return self

    @property
    def T(self) -> "CsrMatrix":
        if self._transpose is None:
            rows = np.repeat(np.arange(self.shape[0], dtype=np.int64), np.diff(self.indptr))
            t = CsrMatrix.from_coo(
                (self.shape[1], self.shape[0]), self.indices, rows, self.data
            )
            t._transpose = self
            self._transpose = t
        return self._transpose

    def matmul(self, dense: np.ndarray) -> np.ndarray:
        if dense.ndim != 2 or dense.shape[0] != self.shape[1]:
            raise DimensionError(
                f"cannot multiply {self.shape} CSR by dense {dense.shape}"
            )
        return kernels.csr_matmul(self.indptr, self.indices, self.data, np.ascontiguousarray(dense))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.shape[0], dtype=np.int64), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out
