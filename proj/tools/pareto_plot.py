#!/usr/bin/env python3
# Copyright 2026 The wst-lspg Authors.
# SPDX-License-Identifier: Apache-2.0

"""Turn a sweep CSV from `wst sweep` into gnuplot data and script files.

Writes one <prefix>_<method>.dat per method with every converged row and
one <prefix>_<method>_front.dat with its Pareto front, plus <prefix>.gp.
"""

import argparse
import csv
import math
import sys
from collections import defaultdict


def pareto(points):
    """Non-dominated (time, error) points, sorted by time. Ties are kept."""
    front = []
    for p in points:
        dominated = any(
            q[0] <= p[0] and q[1] <= p[1] and (q[0] < p[0] or q[1] < p[1]) for q in points
        )
        if not dominated:
            front.append(p)
    return sorted(front)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", help="sweep CSV")
    ap.add_argument("--error", default="mse", choices=["mse", "imse", "residual_l2"])
    ap.add_argument("--prefix", default="pareto")
    args = ap.parse_args(argv)

    by_method = defaultdict(list)
    with open(args.csv, newline="") as f:
        for row in csv.DictReader(f):
            if row.get("converged", "1") not in ("1", "true"):
                continue
            t = float(row["relative_wall_time"])
            e = float(row[args.error])
            if not (math.isfinite(t) and math.isfinite(e)):
                continue
            by_method[row["method"]].append((t, e, row["l_w"], row["l_s"], row["n_st"]))
    if not by_method:
        print("pareto_plot: no converged rows", file=sys.stderr)
        return 1

    plots = []
    for method, rows in sorted(by_method.items()):
        tag = method.replace("-", "_").lower()
        with open(f"{args.prefix}_{tag}.dat", "w") as f:
            f.write("# relative_wall_time %s l_w l_s n_st\n" % args.error)
            for r in sorted(rows):
                f.write(" ".join(str(v) for v in r) + "\n")
        with open(f"{args.prefix}_{tag}_front.dat", "w") as f:
            f.write("# relative_wall_time %s\n" % args.error)
            for t, e in pareto([(r[0], r[1]) for r in rows]):
                f.write(f"{t} {e}\n")
        plots.append(f"'{args.prefix}_{tag}.dat' using 1:2 with points title '{method}'")
        plots.append(f"'{args.prefix}_{tag}_front.dat' using 1:2 with lines notitle")

    with open(f"{args.prefix}.gp", "w") as f:
        f.write("set logscale xy\n")
        f.write("set xlabel 'online wall time / FOM wall time'\n")
        f.write(f"set ylabel '{args.error}'\n")
        f.write("set key outside\n")
        f.write("plot " + ", \\\n     ".join(plots) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
