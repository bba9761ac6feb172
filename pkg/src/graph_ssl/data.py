"""Datasets: on-disk format, experimental-setting transforms, synthetic generator.

Directory layout (all files required):

    meta.json      {"num_nodes": n, "num_features": d, "num_classes": K}
    features.tsv   n lines, d tab-separated decimal floats
    labels.tsv     n lines, one integer in [0, K)
    edges.tsv      one edge per line, "u\\tv", 0-based node ids
    split.json     {"train": [...], "val": [...], "test": [...]}

Only train labels are visible to training (observed mask == train mask);
ground-truth labels for the other nodes are retained for evaluation.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DataFormatError
from .graphs import SparseGraph, canonicalize_edges

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64, ground truth for every node
    num_classes: int
    graph: SparseGraph
    observed_mask: np.ndarray  # nodes whose labels are visible to training
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def validate(self) -> None:
        n = self.n
        for name in ("observed_mask", "train_mask", "val_mask", "test_mask"):
            m = getattr(self, name)
            if m.shape != (n,) or m.dtype != bool:
                raise DataFormatError(f"{name} must be a bool mask of length {n}")
        if self.labels.shape != (n,):
            raise DataFormatError("labels length must equal node count")
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= self.num_classes:
            raise DataFormatError("label outside [0, num_classes)")
        if self.graph.n != n:
            raise DataFormatError("graph node count differs from feature rows")
        if (self.train_mask & ~self.observed_mask).any():
            raise DataFormatError("train mask must be a subset of the observed mask")
        overlap = (
            (self.train_mask & self.val_mask)
            | (self.train_mask & self.test_mask)
            | (self.val_mask & self.test_mask)
        )
        if overlap.any():
            raise DataFormatError("train/val/test masks must be pairwise disjoint")


def _mask_from_ids(ids, n: int, name: str) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for i in ids:
        if not isinstance(i, int) or not 0 <= i < n:
            raise DataFormatError(f"split.json: {name} id {i!r} out of range [0,{n})")
        mask[i] = True
    return mask


def load_dataset(directory: str) -> Dataset:
    """Load and validate a dataset directory; symmetrizes and dedupes edges."""
    paths = {
        name: os.path.join(directory, name)
        for name in ("meta.json", "features.tsv", "labels.tsv", "edges.tsv", "split.json")
    }
    for name, path in paths.items():
        if not os.path.isfile(path):
            raise DataFormatError(f"missing required file: {path}")

    with open(paths["meta.json"]) as f:
        try:
            meta = json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"meta.json: invalid JSON ({e})") from None
    try:
        n = int(meta["num_nodes"])
        d = int(meta["num_features"])
        k = int(meta["num_classes"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"meta.json: missing or invalid field ({e})") from None
    if n <= 0 or d <= 0 or k <= 0:
        raise DataFormatError("meta.json: counts must be positive")

    features = np.zeros((n, d))
    with open(paths["features.tsv"]) as f:
        line_no = 0
        for line_no, line in enumerate(f, start=1):
            if line_no > n:
                raise DataFormatError(f"features.tsv: more than {n} lines")
            parts = line.rstrip("\n").split("\t")
            if len(parts) != d:
                raise DataFormatError(
                    f"features.tsv line {line_no}: expected {d} values, got {len(parts)}"
                )
            try:
                features[line_no - 1] = [float(p) for p in parts]
            except ValueError:
                raise DataFormatError(f"features.tsv line {line_no}: non-numeric value") from None
        if line_no != n:
            raise DataFormatError(f"features.tsv: expected {n} lines, got {line_no}")

    labels = np.zeros(n, dtype=np.int64)
    with open(paths["labels.tsv"]) as f:
        line_no = 0
        for line_no, line in enumerate(f, start=1):
            if line_no > n:
                raise DataFormatError(f"labels.tsv: more than {n} lines")
            try:
                y = int(line.strip())
            except ValueError:
                raise DataFormatError(f"labels.tsv line {line_no}: not an integer") from None
            if not 0 <= y < k:
                raise DataFormatError(f"labels.tsv line {line_no}: label {y} outside [0,{k})")
            labels[line_no - 1] = y
        if line_no != n:
            raise DataFormatError(f"labels.tsv: expected {n} lines, got {line_no}")

    raw_pairs = []
    with open(paths["edges.tsv"]) as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(f"edges.tsv line {line_no}: expected 'u\\tv'")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataFormatError(f"edges.tsv line {line_no}: non-integer endpoint") from None
            if not (0 <= u < n and 0 <= v < n):
                raise DataFormatError(f"edges.tsv line {line_no}: endpoint outside [0,{n})")
            raw_pairs.append((u, v))
    edges, n_self, n_dup = canonicalize_edges(np.array(raw_pairs, dtype=np.int64).reshape(-1, 2))
    if n_self:
        log.warning("%s: dropped %d self-loop edge(s)", paths["edges.tsv"], n_self)
    if n_dup:
        log.warning("%s: deduplicated %d edge pair(s)", paths["edges.tsv"], n_dup)

    with open(paths["split.json"]) as f:
        try:
            split = json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"split.json: invalid JSON ({e})") from None
    masks = {}
    for name in ("train", "val", "test"):
        if name not in split:
            raise DataFormatError(f"split.json: missing key {name!r}")
        masks[name] = _mask_from_ids(split[name], n, name)

    ds = Dataset(
        features=features,
        labels=labels,
        num_classes=k,
        graph=SparseGraph(n, edges),
        observed_mask=masks["train"].copy(),
        train_mask=masks["train"],
        val_mask=masks["val"],
        test_mask=masks["test"],
    )
    ds.validate()
    return ds


def _format_float(x: float) -> str:
    # shortest representation that round-trips through float()
    return repr(float(x))


def save_dataset(ds: Dataset, directory: str) -> None:
    """Write a dataset directory in the standard on-disk format."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "meta.json"), "w") as f:
        json.dump(
            {"num_nodes": ds.n, "num_features": ds.num_features, "num_classes": ds.num_classes},
            f,
        )
        f.write("\n")
    with open(os.path.join(directory, "features.tsv"), "w") as f:
        for row in ds.features:
            f.write("\t".join(_format_float(x) for x in row) + "\n")
    with open(os.path.join(directory, "labels.tsv"), "w") as f:
        for y in ds.labels:
            f.write(f"{int(y)}\n")
    with open(os.path.join(directory, "edges.tsv"), "w") as f:
        for u, v in ds.graph.edges:
            f.write(f"{int(u)}\t{int(v)}\n")
    with open(os.path.join(directory, "split.json"), "w") as f:
        json.dump(
            {
                "train": np.flatnonzero(ds.train_mask).tolist(),
                "val": np.flatnonzero(ds.val_mask).tolist(),
                "test": np.flatnonzero(ds.test_mask).tolist(),
            },
            f,
        )
        f.write("\n")


SETTINGS = ("standard", "missing_edge", "reduced_label")


def apply_setting(ds: Dataset, setting: str, rng: np.random.Generator | None = None) -> Dataset:
    """Produce the dataset variant for an experimental setting.

    standard       unchanged
    missing_edge   every edge incident to a test node removed (used for both
                   training and inference)
    reduced_label  ceil(half) of the train nodes of each class moved out of
                   the train and observed masks, chosen by the supplied rng
    """
    if setting == "standard":
        return ds
    if setting == "missing_edge":
        edges = ds.graph.edges
        touches_test = ds.test_mask[edges[:, 0]] | ds.test_mask[edges[:, 1]]
        return replace(ds, graph=SparseGraph(ds.n, edges[~touches_test]))
    if setting == "reduced_label":
        if rng is None:
            raise ConfigError("reduced_label requires an rng")
        train = ds.train_mask.copy()
        observed = ds.observed_mask.copy()
        for c in range(ds.num_classes):
            ids = np.flatnonzero(train & (ds.labels == c))
            n_drop = -(-ids.size // 2)  # ceil
            drop = rng.choice(ids, size=n_drop, replace=False) if n_drop else ids[:0]
            train[drop] = False
            observed[drop] = False
        return replace(ds, train_mask=train, observed_mask=observed)
    raise ConfigError(f"unknown setting {setting!r}; expected one of {SETTINGS}")


def synth_sbm_generate(
    n: int,
    num_classes: int,
    p0: float,
    p1: float,
    feature_dim: int,
    feature_noise: float,
    rng: np.random.Generator,
    labeled_frac: float = 0.1,
    val_frac: float = 0.2,
) -> Dataset:
    """Planted-partition graph with noisy class-centroid features.

    Classes are balanced; each pair {i,j} is edged with probability p0 when
    the classes match and p1 otherwise. Features are the one-hot class
    centroid embedded in feature_dim dimensions plus Gaussian noise. A
    labeled_frac share of each class forms the train split; the rest is
    divided val/test.
    """
    if not (0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0):
        raise ConfigError(f"edge probabilities must lie in [0,1], got p0={p0}, p1={p1}")
    if feature_dim < num_classes:
        raise ConfigError("feature_dim must be at least the class count")
    if not 0.0 < labeled_frac < 1.0:
        raise ConfigError("labeled_frac must be in (0,1)")

    labels = np.arange(n, dtype=np.int64) % num_classes
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p0, p1)
    present = rng.random(prob.shape) < prob
    edges = np.stack([iu[present], ju[present]], axis=1)
    graph = SparseGraph(n, edges)

    features = rng.normal(0.0, feature_noise, size=(n, feature_dim))
    features[np.arange(n), labels] += 1.0

    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for c in range(num_classes):
        ids = rng.permutation(np.flatnonzero(labels == c))
        n_train = max(1, int(round(labeled_frac * ids.size)))
        n_val = max(1, int(round(val_frac * (ids.size - n_train))))
        train[ids[:n_train]] = True
        val[ids[n_train : n_train + n_val]] = True
        test[ids[n_train + n_val :]] = True

    ds = Dataset(
        features=features,
        labels=labels,
        num_classes=num_classes,
        graph=graph,
        observed_mask=train.copy(),
        train_mask=train,
        val_mask=val,
        test_mask=test,
    )
    ds.validate()
    return ds
