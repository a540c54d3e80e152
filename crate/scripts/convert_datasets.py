#!/usr/bin/env python3
"""Convert published graph-benchmark files into the plain-text layout read by teggcn.

Layout produced under OUT (one directory per dataset):

    cora/cora.content          <id> <f_1> ... <f_F> <label>   (one node per line)
    cora/cora.cites            <cited> <citing>
    texas/out1_node_feature_label.txt
    texas/out1_graph_edges.txt
    <name>/splits/split_<i>.txt   train / validation / test node ids, one line each

Sources:

  planetoid  SRC holds the Planetoid pickles ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}.
             Nodes are written in Planetoid order (the order the public 60/20/20 split
             files index into). Citeseer's test-index range contains isolated nodes with
             no test features; they get all-zero feature rows and label 0, as in the
             reference preprocessing, so the graph keeps 3327 nodes.
  geom       SRC is a dataset directory holding out1_node_feature_label.txt and
             out1_graph_edges.txt; the files are copied unchanged.
  splits     SRC holds <name>_split_0.6_0.2_<i>.npz files with boolean train_mask,
             val_mask and test_mask arrays; each becomes splits/split_<i>.txt.

Examples:

    python3 scripts/convert_datasets.py planetoid --name cora --src raw/planetoid --out data
    python3 scripts/convert_datasets.py geom --name texas --src raw/texas --out data
    python3 scripts/convert_datasets.py splits --name texas --src raw/splits --out data
"""

import argparse
import pickle
import shutil
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

PLANETOID_PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph")
GEOM_FILES = ("out1_node_feature_label.txt", "out1_graph_edges.txt")


def _load_pickle(path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def _dense(m):
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def load_planetoid(src: Path, name: str):
    """Returns (features, labels, edges) in Planetoid node order."""
    parts = {p: _load_pickle(src / f"ind.{name}.{p}") for p in PLANETOID_PARTS}
    test_index = [int(line) for line in (src / f"ind.{name}.test.index").read_text().split()]
    test_sorted = sorted(test_index)

    tx, ty = _dense(parts["tx"]), np.asarray(parts["ty"])
    if name == "citeseer":
        full = range(test_sorted[0], test_sorted[-1] + 1)
        tx_ext = np.zeros((len(full), tx.shape[1]), dtype=tx.dtype)
        ty_ext = np.zeros((len(full), ty.shape[1]), dtype=ty.dtype)
        tx_ext[np.array(test_sorted) - test_sorted[0]] = tx
        ty_ext[np.array(test_sorted) - test_sorted[0]] = ty
        tx, ty = tx_ext, ty_ext

    features = np.vstack([_dense(parts["allx"]), tx])
    onehot = np.vstack([np.asarray(parts["ally"]), ty])
    # The test rows are stored in file order; move them to their node ids.
    features[test_index] = features[test_sorted]
    onehot[test_index] = onehot[test_sorted]
    labels = onehot.argmax(axis=1)

    n = features.shape[0]
    edges = set()
    for u, nbrs in parts["graph"].items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))
    return features, labels, sorted(edges)


def _fmt(v):
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_content_cites(out: Path, name: str, features, labels, edges):
    d = out / name
    d.mkdir(parents=True, exist_ok=True)
    with open(d / f"{name}.content", "w") as f:
        for i, (row, y) in enumerate(zip(features, labels)):
            f.write(f"{i} {' '.join(_fmt(v) for v in row)} {int(y)}\n")
    with open(d / f"{name}.cites", "w") as f:
        for u, v in edges:
            f.write(f"{u} {v}\n")
    print(f"{name}: {len(labels)} nodes, {len(edges)} edges, {features.shape[1]} features")


def convert_splits(src: Path, out: Path, name: str):
    d = out / name / "splits"
    d.mkdir(parents=True, exist_ok=True)
    found = 0
    for i in range(10):
        path = src / f"{name}_split_0.6_0.2_{i}.npz"
        if not path.exists():
            continue
        z = np.load(path)
        lines = [
            " ".join(str(j) for j in np.flatnonzero(z[key]))
            for key in ("train_mask", "val_mask", "test_mask")
        ]
        (d / f"split_{i}.txt").write_text("\n".join(lines) + "\n")
        found += 1
    if found == 0:
        sys.exit(f"no {name}_split_0.6_0.2_<i>.npz files under {src}")
    print(f"{name}: wrote {found} split files")


def copy_geom(src: Path, out: Path, name: str):
    d = out / name
    d.mkdir(parents=True, exist_ok=True)
    for f in GEOM_FILES:
        shutil.copyfile(src / f, d / f)
    print(f"{name}: copied {', '.join(GEOM_FILES)}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("kind", choices=["planetoid", "geom", "splits"])
    ap.add_argument("--name", required=True, help="dataset name, e.g. cora or texas")
    ap.add_argument("--src", required=True, type=Path)
    ap.add_argument("--out", default=Path("data"), type=Path)
    args = ap.parse_args()
    name = args.name.lower()
    if args.kind == "planetoid":
        write_content_cites(args.out, name, *load_planetoid(args.src, name))
    elif args.kind == "geom":
        copy_geom(args.src, args.out, name)
    else:
        convert_splits(args.src, args.out, name)


if __name__ == "__main__":
    main()
