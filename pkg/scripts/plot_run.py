#!/usr/bin/env python3
"""Plot a result directory: population curve, final blob, nodes and hulls.

Needs the optional ``plots`` extra (matplotlib).

    python scripts/plot_run.py runs/square-mst --save square.png
"""
import argparse
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from physarum_shape import geometry as geo
from physarum_shape.outputs import load_result, read_population_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("result_dir")
    ap.add_argument("--save")
    args = ap.parse_args()
    d = Path(args.result_dir)
    data = load_result(d)
    pop = read_population_csv(d / "population.csv")

    fig, (a, b) = plt.subplots(1, 2, figsize=(11, 5))
    a.plot(pop)
    a.set_xlabel("step")
    a.set_ylabel("population")
    b.imshow(data["blob"], origin="lower", cmap="Greys", alpha=0.6)
    nodes = data["nodes"]
    b.plot(nodes[:, 0], nodes[:, 1], "r.", ms=5)
    if len(nodes) >= 3:
        v = geo.convex_hull(nodes).vertices
        b.plot(*np.vstack([v, v[:1]]).T, "r-", lw=1, label="node hull")
    if (d / "concave_hull.json").exists():
        v = geo.Polygon.from_json(geo.load_json(d / "concave_hull.json")).vertices
        b.plot(*np.vstack([v, v[:1]]).T, "b-", lw=1, label="extracted hull")
    b.legend(loc="upper right", fontsize=8)
    b.set_title(d.name)
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=100)
    else:
        plt.show()


if __name__ == "__main__":
    main()
