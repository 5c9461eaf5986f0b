#!/usr/bin/env python3
# Copyright 2026 The proxforest Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Convert public archive formats into the loader formats used by pfgap.

  ts        UEA/UCR/Monash .ts file        -> series JSONL
  tu        TUDataset directory (DS_A.txt,...) -> graph JSONL
  penguins  palmerpenguins penguins.csv    -> numeric CSV (complete rows)
  sklearn   bundled scikit-learn table     -> numeric CSV
"""

import argparse
import csv
import json
import os
import sys


def _num(tok):
    tok = tok.strip()
    if tok in ("?", "NaN", "nan", ""):
        return None
    return float(tok)


def convert_ts(src, dst, prefix):
    """Parse the sktime .ts format (equal or unequal length, uni/multivariate)."""
    in_data = False
    regression = False
    n = 0
    with open(src) as fin, open(dst, "w") as fout:
        for line in fin:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not in_data:
                low = line.lower()
                if low.startswith("@targetlabel true"):
                    regression = True
                if low.startswith("@data"):
                    in_data = True
                continue
            parts = line.split(":")
            label = parts[-1].strip()
            channels = []
            for dim in parts[:-1]:
                if dim.startswith("("):
                    raise SystemExit("timestamped .ts files are not supported")
                channels.append([_num(v) for v in dim.split(",")])
            rec = {"id": f"{prefix}{n}",
                   "label": float(label) if regression else label,
                   "channels": channels}
            fout.write(json.dumps(rec, separators=(",", ":")) + "\n")
            n += 1
    print(f"{dst}: {n} series", file=sys.stderr)


def convert_tu(src_dir, name, dst):
    def rd(suffix):
        path = os.path.join(src_dir, f"{name}_{suffix}.txt")
        if not os.path.exists(path):
            return None
        with open(path) as f:
            return [ln.strip() for ln in f if ln.strip()]

    indicator = [int(v) for v in rd("graph_indicator")]
    graph_labels = rd("graph_labels")
    node_labels = rd("node_labels") or ["0"] * len(indicator)
    edges = [tuple(int(x) for x in ln.replace(" ", "").split(",")) for ln in rd("A")]

    n_graphs = max(indicator)
    first = {}
    for node, g in enumerate(indicator):
        first.setdefault(g, node)
    nodes = {g: [] for g in range(1, n_graphs + 1)}
    for node, g in enumerate(indicator):
        nodes[g].append(int(node_labels[node].split(",")[0]))
    gedges = {g: set() for g in range(1, n_graphs + 1)}
    for u, v in edges:
        g = indicator[u - 1]
        a, b = u - 1 - first[g], v - 1 - first[g]
        if a != b:
            gedges[g].add((min(a, b), max(a, b)))
    with open(dst, "w") as fout:
        for g in range(1, n_graphs + 1):
            rec = {"id": f"g{g - 1}", "label": graph_labels[g - 1].strip(),
                   "nodes": nodes[g], "edges": sorted(list(e) for e in gedges[g])}
            fout.write(json.dumps(rec, separators=(",", ":")) + "\n")
    print(f"{dst}: {n_graphs} graphs", file=sys.stderr)


def convert_penguins(src, dst):
    keep = ["species", "island", "bill_length_mm", "bill_depth_mm",
            "flipper_length_mm", "body_mass_g", "sex"]
    with open(src) as f:
        rows = [r for r in csv.DictReader(f)]
    rows = [r for r in rows if all(r[k] not in ("", "NA") for k in keep)]
    islands = sorted({r["island"] for r in rows})
    sexes = sorted({r["sex"] for r in rows})
    with open(dst, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(keep)
        for r in rows:
            w.writerow([r["species"], islands.index(r["island"]), r["bill_length_mm"],
                        r["bill_depth_mm"], r["flipper_length_mm"], r["body_mass_g"],
                        sexes.index(r["sex"])])
    print(f"{dst}: {len(rows)} rows", file=sys.stderr)


def convert_sklearn(name, dst):
    from sklearn import datasets
    loader = getattr(datasets, f"load_{name}")
    bunch = loader()
    with open(dst, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["target"] + [f"f{i}" for i in range(bunch.data.shape[1])])
        for x, y in zip(bunch.data, bunch.target):
            w.writerow([f"c{y}"] + [repr(float(v)) for v in x])
    print(f"{dst}: {bunch.data.shape[0]} rows", file=sys.stderr)


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("ts")
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("--id-prefix", default="s")
    p = sub.add_parser("tu")
    p.add_argument("src_dir")
    p.add_argument("name")
    p.add_argument("dst")
    p = sub.add_parser("penguins")
    p.add_argument("src")
    p.add_argument("dst")
    p = sub.add_parser("sklearn")
    p.add_argument("name")
    p.add_argument("dst")
    a = ap.parse_args()
    if a.cmd == "ts":
        convert_ts(a.src, a.dst, a.id_prefix)
    elif a.cmd == "tu":
        convert_tu(a.src_dir, a.name, a.dst)
    elif a.cmd == "penguins":
        convert_penguins(a.src, a.dst)
    else:
        convert_sklearn(a.name, a.dst)


if __name__ == "__main__":
    main()
