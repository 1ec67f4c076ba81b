#!/usr/bin/env python3
"""G_max sweep on the square point set: final concavity and stability per value.

    python scripts/gmax_sweep.py --seeds 1..3
    python scripts/gmax_sweep.py --values 5,25 --seeds 1..10 --csv sweep.csv
"""
import argparse
import csv

import numpy as np

from physarum_shape.cli import parse_seeds
from physarum_shape.scenarios import is_stable, preset, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="1..3")
    ap.add_argument("--values", help="comma separated G_max values (default: preset sweep)")
    ap.add_argument("--csv", help="write per-run rows here")
    args = ap.parse_args()

    base = preset("gmax-sweep")
    if args.values:
        base.sweep = dict(base.sweep, values=[int(v) for v in args.values.split(",")])
    rows = []
    for v in base.variants():
        conc, stable = [], []
        for seed in parse_seeds(args.seeds):
            res = run_scenario(v, seed)
            conc.append(res.metrics["blob"]["concavity"])
            stable.append(is_stable(res.population))
            rows.append({"gmax": v.params.G_max, "seed": seed, "steps": res.steps_run,
                         "final_population": res.final_population,
                         "concavity": conc[-1], "stable": stable[-1]})
        print(f"G_max {v.params.G_max:3d}: median concavity {np.median(conc):.4f}  "
              f"stable {sum(stable)}/{len(stable)}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
