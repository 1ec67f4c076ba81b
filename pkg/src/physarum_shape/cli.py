"""Command line entry point.

    physarum-shape presets
    physarum-shape run --preset square-mst --seed 42 --steps 5000 --out runs/sq
    physarum-shape run --preset gmax-sweep --seeds 1..10 --out runs/sweep
    physarum-shape sweep --preset square-mst --values 5,10,20 --seeds 1..3
    physarum-shape compare runs/sq --oracle convex --max-hausdorff 10

Exit codes: 0 success, 2 configuration error, 3 runtime error,
4 comparison outside the requested bounds.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .config import apply_overrides, parse_and_validate
from .geometry import DegenerateHullError
from .outputs import ORACLES, MissingArtefactError, compare, execute, summarise, write_sweep_summary
from .params import ConfigError
from .scenarios import Scenario, preset, preset_catalogue

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_COMPARE = 0, 2, 3, 4


def parse_seeds(text: str) -> list[int]:
    """``"7"``, ``"1,4,9"`` or an inclusive range ``"1..10"``."""
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = (int(v) for v in part.split(".."))
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}", "--seeds") from None
    if not seeds:
        raise ConfigError("no seeds given", "--seeds")
    return seeds


def load_scenario(args) -> tuple[Scenario, dict]:
    if bool(args.preset) == bool(args.config):
        raise ConfigError("give exactly one of --preset or --config", "--preset")
    if args.preset:
        scenario, source = preset(args.preset), {"preset": args.preset}
    else:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}", "--config") from None
        scenario, source = parse_and_validate(text), {"config": str(path)}
    scenario = apply_overrides(scenario, args.set or [])
    if args.set:
        source["overrides"] = list(args.set)
    return scenario, source


def _task(job):
    scenario, seed, out, steps, frames, source = job
    result = execute(scenario, seed, out, steps=steps, frames_every=frames, source=source)
    conc = result.metrics.get("blob", {}).get("concavity", float("nan"))
    return {"gmax": scenario.params.G_max, "seed": seed,
            "final_population": result.final_population, "concavity": conc}


def plan_runs(scenario: Scenario, seeds: list[int], out: Path, steps, frames, source):
    jobs = []
    variants = scenario.variants()
    sweep = scenario.sweep is not None
    for v in variants:
        for seed in seeds:
            if sweep:
                d = out / f"gmax{v.params.G_max}" / f"seed{seed}"
            elif len(seeds) > 1:
                d = out / f"seed{seed}"
            else:
                d = out
            jobs.append((v, seed, d, steps, frames, dict(source, seed=seed)))
    return jobs


def run_jobs(jobs, workers: int) -> list[dict]:
    if workers <= 1 or len(jobs) <= 1:
        return [_task(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, jobs))


def cmd_presets(args) -> int:
    for sc in preset_catalogue():
        p = sc.params
        print(f"{sc.name:20s} {sc.width}x{sc.height}  p={p.p:<6d} steps={sc.steps}"
              f"{'  sweep G_max=' + ','.join(map(str, sc.sweep['values'])) if sc.sweep else ''}")
    return EXIT_OK


def cmd_run(args, sweep_values: Optional[list[int]] = None) -> int:
    scenario, source = load_scenario(args)
    if sweep_values is not None:
        if not scenario.params.growth_enabled:
            raise ConfigError("G_max sweep requires a growth-enabled scenario", "--values")
        per = scenario.sweep.get("steps", {}) if scenario.sweep else {}
        scenario = replace(scenario, sweep={"key": "G_max", "values": sweep_values, "steps": per}).validate()
    seeds = parse_seeds(args.seeds) if args.seeds else [args.seed]
    out = Path(args.out or f"runs/{scenario.name}")
    jobs = plan_runs(scenario, seeds, out, args.steps, args.frames_every, source)
    rows = run_jobs(jobs, args.jobs)
    if scenario.sweep is not None:
        write_sweep_summary(out / "sweep_summary.csv", rows)
    for row, job in zip(rows, jobs):
        print(f"{job[2]}: final population {row['final_population']}, concavity {row['concavity']:.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    report = compare(args.result_dir, args.oracle, args.alpha_radius)
    failures = []
    if args.max_hausdorff is not None and report["hausdorff"] > args.max_hausdorff:
        failures.append(f"hausdorff {report['hausdorff']:.3f} > {args.max_hausdorff}")
    if args.min_node_coverage is not None and report["node_coverage"] < args.min_node_coverage:
        failures.append(f"node coverage {report['node_coverage']:.3f} < {args.min_node_coverage}")
    report["passed"] = not failures
    report["failures"] = failures
    path = Path(args.result_dir) / f"compare_{args.oracle}.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(summarise(report))
    return EXIT_OK if not failures else EXIT_COMPARE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="physarum-shape", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("presets", help="list built-in scenarios")

    def scenario_args(p):
        p.add_argument("--preset")
        p.add_argument("--config", help="JSON scenario file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--seeds", help="e.g. 1..10 or 1,2,5 (overrides --seed)")
        p.add_argument("--steps", type=int, help="fixed step budget; disables early stopping")
        p.add_argument("--frames-every", type=int)
        p.add_argument("--out")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a model parameter")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    scenario_args(sub.add_parser("run", help="run a scenario"))
    sw = sub.add_parser("sweep", help="run a G_max sweep")
    scenario_args(sw)
    sw.add_argument("--values", help="comma separated G_max values (default: the preset's sweep)")

    cp = sub.add_parser("compare", help="compare a result directory with an oracle")
    cp.add_argument("result_dir")
    cp.add_argument("--oracle", choices=ORACLES, default="convex")
    cp.add_argument("--alpha-radius", type=float)
    cp.add_argument("--max-hausdorff", type=float)
    cp.add_argument("--min-node-coverage", type=float)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            return cmd_presets(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            values = None
            if args.values:
                try:
                    values = [int(v) for v in args.values.split(",")]
                except ValueError:
                    raise ConfigError(f"bad value list {args.values!r}", "--values") from None
            elif args.preset or args.config:
                sc, _ = load_scenario(args)
                if sc.sweep is None:
                    raise ConfigError("scenario has no sweep; pass --values", "--values")
            return cmd_run(args, values)
        return cmd_compare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingArtefactError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, DegenerateHullError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
