"""Numba-compiled hot kernels. Loop bodies mirror numpy_backend exactly."""

import numpy as np
from numba import njit


@njit(cache=True)
def csr_matmul(indptr, indices, data, dense):
    n_rows = indptr.shape[0] - 1
    d = dense.shape[1]
    out = np.zeros((n_rows, d))
    for i in range(n_rows):
        for p in range(indptr[i], indptr[i + 1]):
            a = data[p]
            col = indices[p]
            for j in range(d):
                out[i, j] += a * dense[col, j]
    return out


@njit(cache=True)
def scatter_add_rows(rows, idx, n):
    d = rows.shape[1]
    out = np.zeros((n, d))
    for e in range(rows.shape[0]):
        i = idx[e]
        for j in range(d):
            out[i, j] += rows[e, j]
    return out


@njit(cache=True)
def segment_sum(values, idx, n):
    out = np.zeros(n)
    for e in range(values.shape[0]):
        out[idx[e]] += values[e]
    return out


@njit(cache=True)
def segment_max(values, idx, n):
    out = np.full(n, -np.inf)
    for e in range(values.shape[0]):
        i = idx[e]
        if values[e] > out[i]:
            out[i] = values[e]
    return out
