"""Pure-numpy reference implementations of the hot kernels.

These are the fallback path when numba is unavailable or disabled via
GRAPH_SSL_BACKEND=numpy. Semantics are identical to the numba backend.
"""

import numpy as np


def csr_matmul(indptr, indices, data, dense):
    """Multiply a CSR matrix by a dense matrix: out[i] = sum_k A[i,k] * dense[k]."""
    n_rows = indptr.shape[0] - 1
    out = np.zeros((n_rows, dense.shape[1]))
    row_ids = np.repeat(np.arange(n_rows), np.diff(indptr))
    np.add.at(out, row_ids, data[:, None] * dense[indices])
    return out


def scatter_add_rows(rows, idx, n):
    """out[idx[e]] += rows[e] for every e; out has n rows."""
    out = np.zeros((n, rows.shape[1]))
    np.add.at(out, idx, rows)
    return out


def segment_sum(values, idx, n):
    out = np.zeros(n)
    np.add.at(out, idx, values)
    return out


def segment_max(values, idx, n):
    """Per-segment maximum; empty segments stay at -inf."""
    out = np.full(n, -np.inf)
    np.maximum.at(out, idx, values)
    return out
