"""Undirected graphs in compressed form, normalization, and edge sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SamplingError
from .sparse import CsrMatrix


def canonicalize_edges(pairs) -> tuple[np.ndarray, int, int]:
    """Sort pairs as (min,max), drop self-loops and duplicates.

    Returns (edges, n_self_loops_dropped, n_duplicates_dropped) where edges
    is an (m,2) array with u<v, lexicographically sorted and unique.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    self_mask = pairs[:, 0] == pairs[:, 1]
    n_self = int(self_mask.sum())
    pairs = pairs[~self_mask]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    edges = np.unique(np.stack([lo, hi], axis=1), axis=0) if pairs.size else pairs.reshape(0, 2)
    n_dup = int(pairs.shape[0] - edges.shape[0])
    return edges, n_self, n_dup


class SparseGraph:
    """Undirected simple graph: unique {u,v} pairs plus CSR neighbor lists."""

    def __init__(self, n: int, edges: np.ndarray):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise DimensionError("edge endpoint out of range")
            if (edges[:, 0] >= edges[:, 1]).any():
                raise DimensionError("edges must be canonical (u < v); use from_pairs")
        self.n = int(n)
        self.edges = edges
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        self._adj_indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self._adj_indptr, src + 1, 1)
        np.cumsum(self._adj_indptr, out=self._adj_indptr)
        self._adj_indices = dst[order]
        # sorted codes u*n+v (u<v) for O(log m) membership checks
        self._edge_codes = edges[:, 0] * n + edges[:, 1]

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "SparseGraph":
        edges, _, _ = canonicalize_edges(pairs)
        return cls(n, edges)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        return np.diff(self._adj_indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self._adj_indices[self._adj_indptr[i] : self._adj_indptr[i + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        lo, hi = (u, v) if u < v else (v, u)
        code = lo * self.n + hi
        pos = np.searchsorted(self._edge_codes, code)
        return pos < self._edge_codes.size and self._edge_codes[pos] == code

    def contains_pairs(self, pairs: np.ndarray) -> np.ndarray:
        """Vectorized membership test for canonical (u<v) pairs."""
        codes = pairs[:, 0] * self.n + pairs[:, 1]
        pos = np.searchsorted(self._edge_codes, codes)
        pos = np.minimum(pos, max(self._edge_codes.size - 1, 0))
        if self._edge_codes.size == 0:
            return np.zeros(len(pairs), dtype=bool)
        return self._edge_codes[pos] == codes

    def directed_with_self_loops(self) -> tuple[np.ndarray, np.ndarray]:
        """(src, dst) arrays: both directions of every edge plus one self-loop
        per node, sorted by (dst, src) so segments are contiguous."""
        loops = np.arange(self.n, dtype=np.int64)
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1], loops])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0], loops])
        order = np.lexsort((src, dst))
        return src[order], dst[order]


def gcn_normalize(g: SparseGraph) -> CsrMatrix:
    """Symmetrically normalized adjacency with self-loops.

    Entry (i,j) is 1/sqrt((d_i+1)(d_j+1)) for neighbors i~j and for i=j,
    zero elsewhere.
    """
    inv_sqrt = 1.0 / np.sqrt(g.degrees() + 1.0)
    loops = np.arange(g.n, dtype=np.int64)
    rows = np.concatenate([g.edges[:, 0], g.edges[:, 1], loops])
    cols = np.concatenate([g.edges[:, 1], g.edges[:, 0], loops])
    vals = inv_sqrt[rows] * inv_sqrt[cols]
    return CsrMatrix.from_coo((g.n, g.n), rows, cols, vals).mark_symmetric()


@dataclass(frozen=True)
class EdgeBatch:
    """Positive (observed) and negative (sampled non-edge) pairs for one epoch."""

    positives: np.ndarray
    negatives: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "positives", np.asarray(self.positives, dtype=np.int64).reshape(-1, 2))
        object.__setattr__(self, "negatives", np.asarray(self.negatives, dtype=np.int64).reshape(-1, 2))


def all_non_edges(g: SparseGraph) -> np.ndarray:
    """Every canonical non-edge pair; O(n^2), for small graphs and oracles."""
    iu = np.triu_indices(g.n, k=1)
    pairs = np.stack([iu[0], iu[1]], axis=1).astype(np.int64)
    return pairs[~g.contains_pairs(pairs)]


def full_edge_batch(g: SparseGraph) -> EdgeBatch:
    """All pairs enumerated: exact graph likelihood, no sampling."""
    return EdgeBatch(positives=g.edges, negatives=all_non_edges(g))


def negative_sample_edges(g: SparseGraph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly sample `count` distinct non-edge pairs (no self-pairs).

    Small pair spaces are enumerated exactly; larger ones use batched
    rejection sampling with a bounded attempt budget.
    """
    count = int(count)
    total_pairs = g.n * (g.n - 1) // 2
    n_non_edges = total_pairs - g.num_edges
    if count > n_non_edges:
        raise SamplingError(
            f"requested {count} negative pairs but only {n_non_edges} non-edges exist"
        )
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)

    if total_pairs <= max(20_000, 4 * count):
        candidates = all_non_edges(g)
        chosen = rng.choice(candidates.shape[0], size=count, replace=False)
        return candidates[np.sort(chosen)]

    seen: set[int] = set()
    out = np.empty((count, 2), dtype=np.int64)
    filled = 0
    attempts_left = 200 * count + 10_000
    while filled < count:
        batch = min(4 * (count - filled) + 64, attempts_left)
        if batch <= 0:
            raise SamplingError("negative sampling exhausted its attempt budget")
        attempts_left -= batch
        u = rng.integers(0, g.n, size=batch)
        v = rng.integers(0, g.n, size=batch)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        ok = lo != hi
        pairs = np.stack([lo[ok], hi[ok]], axis=1)
        pairs = pairs[~g.contains_pairs(pairs)]
        for a, b in pairs:
            code = int(a) * g.n + int(b)
            if code in seen:
                continue
            seen.add(code)
            out[filled] = (a, b)
            filled += 1
            if filled == count:
                break
    return out
