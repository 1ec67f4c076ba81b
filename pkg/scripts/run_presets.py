#!/usr/bin/env python3
"""Run every preset (or a chosen subset) once and print a one-line summary each.

    python scripts/run_presets.py --out runs/all --seed 1
    python scripts/run_presets.py --only h-mask hull-band-repel --steps 2000
"""
import argparse
import time
from pathlib import Path

from physarum_shape.outputs import execute
from physarum_shape.scenarios import preset_catalogue


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/presets")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--steps", type=int, help="fixed budget for every preset (disables early stop)")
    ap.add_argument("--frames-every", type=int, default=0)
    ap.add_argument("--only", nargs="*")
    args = ap.parse_args()

    for sc in preset_catalogue():
        if args.only and sc.name not in args.only:
            continue
        for v in sc.variants():
            t0 = time.time()
            res = execute(v, args.seed, Path(args.out) / v.name, steps=args.steps,
                          frames_every=args.frames_every)
            m = res.metrics
            blob = m.get("blob", {})
            print(f"{v.name:22s} steps {res.steps_run:6d}  population {res.final_population:6d}  "
                  f"concavity {blob.get('concavity', float('nan')):.3f}  "
                  f"converged {res.converged!s:5s}  {time.time() - t0:6.1f}s")


if __name__ == "__main__":
    main()
