#!/usr/bin/env python3
"""Convert an upstream citation-benchmark bundle into the plain dataset
directory format (meta.json, features.tsv, labels.tsv, edges.tsv, split.json).

    python3 convert.py --name cora --src path/to/raw --out data/cora

Floats are written with 17 significant digits so the text round-trips the
original 64-bit values exactly; node order follows the source index order and
edges are emitted sorted, deduplicated, without self-loops. Re-running the
conversion is byte-identical.
"""

import argparse
import json
import os
import sys

from planetoid import SourceError, load_source


def write_dataset(ds, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "meta.json"), "w") as f:
        json.dump(
            {
                "num_nodes": int(ds.features.shape[0]),
                "num_features": int(ds.features.shape[1]),
                "num_classes": ds.num_classes,
            },
            f,
        )
        f.write("\n")
    with open(os.path.join(out_dir, "features.tsv"), "w") as f:
        for row in ds.features:
            f.write("\t".join(f"{v:.17g}" for v in row) + "\n")
    with open(os.path.join(out_dir, "labels.tsv"), "w") as f:
        for label in ds.labels:
            f.write(f"{int(label)}\n")
    with open(os.path.join(out_dir, "edges.tsv"), "w") as f:
        for u, v in ds.edges:
            f.write(f"{int(u)}\t{int(v)}\n")
    with open(os.path.join(out_dir, "split.json"), "w") as f:
        json.dump({"train": ds.train_ids, "val": ds.val_ids, "test": ds.test_ids}, f)
        f.write("\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--name", required=True, choices=("cora", "citeseer", "pubmed"))
    parser.add_argument("--src", required=True, help="directory with the ind.* files")
    parser.add_argument("--out", required=True, help="dataset directory to write")
    args = parser.parse_args(argv)
    try:
        ds = load_source(args.src, args.name)
    except SourceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    write_dataset(ds, args.out)
    print(
        f"wrote {args.out}: n={ds.features.shape[0]} d={ds.features.shape[1]} "
        f"K={ds.num_classes} edges={len(ds.edges)} "
        f"train/val/test={len(ds.train_ids)}/{len(ds.val_ids)}/{len(ds.test_ids)}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
