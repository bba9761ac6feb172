#!/usr/bin/env python3
"""Spot-check a converted dataset directory against its upstream source.

    python3 verify.py --name cora --src path/to/raw --out data/cora [--count 100]

Re-reads the upstream bundle, samples nodes, and compares their feature rows,
labels, and neighbor sets with what the output files say; also checks the
counts and split lists in full. Any mismatch is reported and exits nonzero.
"""

import argparse
import json
import os
import sys

import numpy as np

from planetoid import SourceError, load_source


def read_output(out_dir: str):
    with open(os.path.join(out_dir, "meta.json")) as f:
        meta = json.load(f)
    features = np.loadtxt(os.path.join(out_dir, "features.tsv"), delimiter="\t",
                          ndmin=2, dtype=np.float64)
    labels = np.loadtxt(os.path.join(out_dir, "labels.tsv"), dtype=np.int64, ndmin=1)
    edges_path = os.path.join(out_dir, "edges.tsv")
    if os.path.getsize(edges_path):
        edges = np.loadtxt(edges_path, delimiter="\t", dtype=np.int64, ndmin=2)
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
    with open(os.path.join(out_dir, "split.json")) as f:
        split = json.load(f)
    return meta, features, labels, edges, split


def neighbor_sets(edges, n):
    out = [set() for _ in range(n)]
    for u, v in edges:
        out[u].add(int(v))
        out[v].add(int(u))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--name", required=True, choices=("cora", "citeseer", "pubmed"))
    parser.add_argument("--src", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--count", type=int, default=100, help="nodes to spot-check")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        src = load_source(args.src, args.name)
    except SourceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    meta, features, labels, edges, split = read_output(args.out)

    mismatches = []
    n = src.features.shape[0]
    if (meta["num_nodes"], meta["num_features"], meta["num_classes"]) != (
        n, src.features.shape[1], src.num_classes,
    ):
        mismatches.append(f"meta.json counts {meta} differ from source")
    if features.shape != src.features.shape:
        mismatches.append(f"features shape {features.shape} != {src.features.shape}")
    if (split["train"], split["val"], split["test"]) != (
        src.train_ids, src.val_ids, src.test_ids,
    ):
        mismatches.append("split.json differs from the official source split")
    if edges.shape[0] != len(src.edges) or (edges.shape[0] and not np.array_equal(edges, src.edges)):
        mismatches.append(f"edge list differs ({edges.shape[0]} vs {len(src.edges)})")

    rng = np.random.default_rng(args.seed)
    sample = rng.choice(n, size=min(args.count, n), replace=False)
    src_neigh = neighbor_sets(src.edges, n)
    edges_in_range = edges.size == 0 or (edges.min() >= 0 and edges.max() < n)
    out_neigh = neighbor_sets(edges, n) if edges_in_range else None
    for i in sample:
        i = int(i)
        if features.shape == src.features.shape and not np.array_equal(features[i], src.features[i]):
            mismatches.append(f"node {i}: feature row differs")
        if i < labels.shape[0] and labels[i] != src.labels[i]:
            mismatches.append(f"node {i}: label {labels[i]} != {src.labels[i]}")
        if out_neigh is not None and out_neigh[i] != src_neigh[i]:
            mismatches.append(f"node {i}: neighbor set differs")

    if mismatches:
        for m in mismatches[:20]:
            print(f"MISMATCH: {m}", file=sys.stderr)
        print(f"{len(mismatches)} mismatch(es) over {len(sample)} sampled nodes", file=sys.stderr)
        return 1
    print(f"ok: {len(sample)} sampled nodes match; counts, splits, and edges consistent")
    return 0


if __name__ == "__main__":
    sys.exit(main())
