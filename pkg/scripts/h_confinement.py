#!/usr/bin/env python3
"""Fraction of particles inside the H region, with and without the light mask.

Also runs both presets with growth and shrinkage switched off, which isolates
the effect of the sensing mask from population turnover.
"""
import argparse

import numpy as np

from physarum_shape.cli import parse_seeds
from physarum_shape.scenarios import build_world, preset, run_scenario


def fixed_population(name, seed, steps):
    sc = preset(name)
    w = build_world(sc, seed)
    w.growth = w.shrink = False
    w.advance(steps)
    region = sc.region_mask()
    c = w.cells()
    return float(region[c[:, 1], c[:, 0]].mean()), w.population


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="1..3")
    ap.add_argument("--steps", type=int, default=10000)
    args = ap.parse_args()
    seeds = parse_seeds(args.seeds)
    for name in ("h-mask", "h-nomask"):
        fr = [run_scenario(preset(name), s, steps=args.steps).metrics["in_region_fraction"] for s in seeds]
        fx = [fixed_population(name, s, args.steps) for s in seeds]
        print(f"{name:9s} in-region fraction {np.mean(fr):.3f} (growth on)  "
              f"{np.mean([f for f, _ in fx]):.3f} (fixed population of {fx[0][1]})")


if __name__ == "__main__":
    main()
