"""Reader for the upstream citation-benchmark distribution.

Each dataset ships as eight files: ind.<name>.{x,tx,allx,y,ty,ally,graph,
test.index}. x/tx/allx are pickled scipy CSR feature matrices, y/ty/ally the
matching one-hot label arrays, graph a pickled {node: [neighbors]} mapping,
and test.index a text list of (possibly shuffled) test node ids. The pickles
are Python-2 era, hence the latin1 decoding.

Assembly follows the standard transductive setup: stack allx over tx, then
permute the test block so each test row lands at its graph position; train is
the x block, val the next block of nodes after train (500 in the official
splits), test the sorted ids from test.index. Gaps in the test index range
(isolated citeseer test nodes) become zero feature rows whose all-zero
one-hot argmaxes to class 0, matching the processed output of the common
loaders.
"""

from __future__ import annotations

import os
import pickle
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

SUFFIXES = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")
VAL_COUNT = 500


class SourceError(Exception):
    """The upstream bundle is missing files or internally inconsistent."""


def _load_pickle(path: str):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


@dataclass
class AssembledDataset:
    features: np.ndarray  # (n, d) dense float64
    labels: np.ndarray  # (n,) int64
    num_classes: int
    edges: np.ndarray  # (m, 2) canonical u<v, sorted, deduped, no self-loops
    train_ids: list[int]
    val_ids: list[int]
    test_ids: list[int]


def source_paths(src_dir: str, name: str) -> dict[str, str]:
    paths = {s: os.path.join(src_dir, f"ind.{name}.{s}") for s in SUFFIXES}
    missing = [p for p in paths.values() if not os.path.isfile(p)]
    if missing:
        raise SourceError("missing upstream file(s): " + ", ".join(missing))
    return paths


def load_source(src_dir: str, name: str) -> AssembledDataset:
    paths = source_paths(src_dir, name)
    x = sp.csr_matrix(_load_pickle(paths["x"]))
    y = np.asarray(_load_pickle(paths["y"]))
    tx = sp.csr_matrix(_load_pickle(paths["tx"]))
    ty = np.asarray(_load_pickle(paths["ty"]))
    allx = sp.csr_matrix(_load_pickle(paths["allx"]))
    ally = np.asarray(_load_pickle(paths["ally"]))
    graph = _load_pickle(paths["graph"])
    with open(paths["test.index"]) as f:
        reorder = np.array([int(line.strip()) for line in f if line.strip()], dtype=np.int64)
    if reorder.size == 0:
        raise SourceError("test.index is empty")
    if tx.shape[1] != allx.shape[1] or ty.shape[1] != ally.shape[1]:
        raise SourceError("feature/label widths differ between allx/ally and tx/ty")

    srt = np.sort(reorder)
    lo, hi = int(srt[0]), int(srt[-1])
    if allx.shape[0] != lo:
        raise SourceError(f"allx rows ({allx.shape[0]}) must meet the test range start ({lo})")

    span = hi - lo + 1
    if span != tx.shape[0]:
        # isolated test nodes absent from test.index: zero-fill their rows
        tx_ext = sp.lil_matrix((span, tx.shape[1]))
        tx_ext[srt - lo, :] = tx
        tx = sp.csr_matrix(tx_ext)
        ty_ext = np.zeros((span, ty.shape[1]), dtype=ty.dtype)
        ty_ext[srt - lo, :] = ty
        ty = ty_ext

    features = np.asarray(sp.vstack([allx, tx]).todense(), dtype=np.float64)
    onehot = np.vstack([ally, ty]).astype(np.float64)
    # test.index row k of the stacked block belongs at graph position
    # reorder[k]; after the gap extension the block is keyed by sorted ids,
    # so move rows from sorted positions to their listed positions
    features[reorder, :] = features[srt, :].copy()
    onehot[reorder, :] = onehot[srt, :].copy()

    n = features.shape[0]
    labels = onehot.argmax(axis=1).astype(np.int64)
    num_classes = int(onehot.shape[1])

    pairs = set()
    for u, neighbors in graph.items():
        for v in neighbors:
            u, v = int(u), int(v)
            if u == v:
                continue
            if not (0 <= u < n and 0 <= v < n):
                raise SourceError(f"graph neighbor ({u},{v}) outside [0,{n})")
            pairs.add((min(u, v), max(u, v)))
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)

    n_train = int(y.shape[0])
    # the validation block sits between the train rows and the test range
    n_val = min(VAL_COUNT, lo - n_train)
    if n_val <= 0:
        raise SourceError("no room for a validation block between train and test rows")
    train_ids = list(range(n_train))
    val_ids = list(range(n_train, n_train + n_val))
    test_ids = [int(i) for i in srt]

    return AssembledDataset(
        features=features,
        labels=labels,
        num_classes=num_classes,
        edges=edges,
        train_ids=train_ids,
        val_ids=val_ids,
        test_ids=test_ids,
    )
