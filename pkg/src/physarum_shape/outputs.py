"""Result directories: writing run artefacts and comparing them with oracles."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from . import geometry as geo
from .config import to_config
from .lattice import read_pgm, write_pgm
from .scenarios import Scenario, ScenarioResult, run_scenario

ORACLES = ("convex", "mst", "alpha")


class MissingArtefactError(FileNotFoundError):
    pass


def _dump(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_population_csv(path: Path, population) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "population"])
        for step, n in enumerate(population):
            w.writerow([step, int(n)])


def read_population_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["step", "population"]:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    return np.array([int(r[1]) for r in rows[1:]], dtype=np.int64)


def execute(scenario: Scenario, seed: int, out_dir, steps: Optional[int] = None,
            frames_every: Optional[int] = None, source: Optional[dict] = None) -> ScenarioResult:
    """Run one scenario and write every artefact into ``out_dir``.

    ``manifest.json`` is written first with ``status: running`` and rewritten
    at the end, so an interrupted run is recognisable on disk.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "package_version": __version__,
        "scenario": scenario.name,
        "source": source or {"preset": scenario.name},
        "seed": int(seed),
        "steps": steps,
        "frames_every": frames_every,
        "config": to_config(scenario),
        "status": "running",
    }
    _dump(out / "manifest.json", manifest)
    try:
        early = False if steps is not None else None
        result = run_scenario(scenario, seed, out_dir=out, steps=steps,
                              frames_every=frames_every, early_stop=early)
        write_result(result, out)
    except BaseException as exc:
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        _dump(out / "manifest.json", manifest)
        raise
    manifest["status"] = "complete"
    manifest["steps_run"] = result.steps_run
    _dump(out / "manifest.json", manifest)
    return result


def write_result(result: ScenarioResult, out: Path) -> None:
    write_population_csv(out / "population.csv", result.population)
    write_pgm(out / "blob.pgm", result.blob * 255.0, 1.0)
    with open(out / "particles.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        w.writerows(result.cells.tolist())
    nodes = result.nodes
    _dump(out / "nodes.json", {"points": nodes.tolist(), "active": result.node_active.tolist()})
    if len(result.cells) >= 3:
        try:
            geo.save_json(out / "hull.json", geo.convex_hull(result.cells).to_json())
        except geo.DegenerateHullError:
            pass
    metrics = dict(result.metrics)
    if len(nodes) >= 2:
        geo.save_json(out / "mst.json", geo.euclidean_mst(nodes).to_json())
    if len(nodes) >= 3 and result.blob.any():
        try:
            poly = geo.extract_concave_hull(result.blob, nodes)
            geo.save_json(out / "concave_hull.json", poly.to_json())
            metrics["concave_hull_vertices"] = len(poly)
        except (geo.DisconnectedBlobError, geo.DegenerateHullError) as exc:
            metrics["concave_hull_error"] = str(exc)
    _dump(out / "metrics.json", metrics)


# -- comparison -----------------------------------------------------------

def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingArtefactError(f"missing artefact {path}")
    return path


def load_result(result_dir) -> dict:
    d = Path(result_dir)
    if not d.is_dir():
        raise MissingArtefactError(f"no result directory {d}")
    nodes = np.asarray(json.loads(_require(d / "nodes.json").read_text())["points"], dtype=np.float64)
    blob = read_pgm(_require(d / "blob.pgm")) > 0
    cells = None
    if (d / "particles.csv").exists():
        data = np.loadtxt(d / "particles.csv", delimiter=",", skiprows=1, ndmin=2)
        cells = data.reshape(-1, 2)
    return {"nodes": nodes.reshape(-1, 2), "blob": blob, "cells": cells}


def boundary_hausdorff(a: geo.Polygon, b: geo.Polygon) -> float:
    """Hausdorff distance between polygon boundaries (vertex-to-edge form)."""
    def directed(p, q):
        v = q.vertices
        segs = np.stack([v, np.roll(v, -1, axis=0)], axis=1)
        return float(geo.point_segment_distance(p.vertices, segs).max())
    return max(directed(a, b), directed(b, a))


def compare(result_dir, oracle: str = "convex", alpha_radius: Optional[float] = None) -> dict:
    if oracle not in ORACLES:
        raise ValueError(f"unknown oracle {oracle!r}; choose from {ORACLES}")
    data = load_result(result_dir)
    nodes, blob = data["nodes"], data["blob"]
    if len(nodes) < 3:
        raise ValueError("comparison needs at least 3 nodes")
    if not blob.any():
        raise ValueError("empty blob")
    cloud = data["cells"] if data["cells"] is not None and len(data["cells"]) >= 3 else geo.cells_of(blob)
    nx, ny = nodes[:, 0].astype(int), nodes[:, 1].astype(int)
    report: dict[str, Any] = {
        "oracle": oracle,
        "result_dir": str(result_dir),
        "node_coverage": float(blob[ny, nx].mean()),
        "concavity": geo.shape_metrics(blob).concavity,
        "blob_components": len(geo.components(blob)),
    }
    emergent = geo.convex_hull(cloud)
    hull = geo.convex_hull(nodes)
    report["hausdorff"] = geo.hausdorff(emergent.vertices, hull.vertices)
    report["hausdorff_boundary"] = boundary_hausdorff(emergent, hull)
    report["nodes_in_emergent_hull"] = float(emergent.contains(nodes).mean())

    if oracle == "mst":
        mst = geo.euclidean_mst(nodes)
        samples = _sample_segments(mst.segments())
        sx, sy = np.rint(samples[:, 0]).astype(int), np.rint(samples[:, 1]).astype(int)
        ok = (sx >= 0) & (sy >= 0) & (sx < blob.shape[1]) & (sy < blob.shape[0])
        covered = np.zeros(len(samples), dtype=bool)
        covered[ok] = blob[sy[ok], sx[ok]]
        report["mst_length"] = mst.total_length
        report["mst_coverage"] = float(covered.mean())
    elif oracle == "alpha":
        r = float(alpha_radius) if alpha_radius else geo.diameter(nodes)
        shape = geo.alpha_shape_reference(nodes, 1.0 / r)
        report["alpha_radius"] = r
        report["alpha_edges"] = len(shape.edges)
        try:
            poly = geo.extract_concave_hull(blob, nodes)
        except (geo.DisconnectedBlobError, geo.DegenerateHullError) as exc:
            report["concave_hull_error"] = str(exc)
        else:
            emergent_edges = _polygon_edge_set(poly, shape.points)
            oracle_edges = shape.edge_set()
            union = emergent_edges | oracle_edges
            report["edge_jaccard"] = len(emergent_edges & oracle_edges) / len(union) if union else 1.0
            used = sorted({i for e in oracle_edges for i in e})
            if used:
                report["hausdorff"] = geo.hausdorff(poly.vertices, shape.points[used])
    return report


def _sample_segments(segments: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    out = []
    for a, b in segments:
        k = max(int(np.ceil(np.hypot(*(b - a)) / spacing)), 1)
        t = np.linspace(0.0, 1.0, k + 1)[:, None]
        out.append(a + t * (b - a))
    return np.vstack(out)


def _polygon_edge_set(poly: geo.Polygon, points: np.ndarray) -> set[tuple[int, int]]:
    index = {tuple(p): i for i, p in enumerate(np.asarray(points).tolist())}
    v = poly.vertices.tolist()
    edges = set()
    for k in range(len(v)):
        i, j = index.get(tuple(v[k])), index.get(tuple(v[(k + 1) % len(v)]))
        if i is not None and j is not None:
            edges.add((min(i, j), max(i, j)))
    return edges


def summarise(report: dict) -> str:
    lines = [f"comparison against {report['oracle']} oracle: {report['result_dir']}"]
    for key in sorted(report):
        if key in ("oracle", "result_dir"):
            continue
        value = report[key]
        lines.append(f"  {key:24s} {value:.4g}" if isinstance(value, float) else f"  {key:24s} {value}")
    return "\n".join(lines)


def write_sweep_summary(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gmax", "seed", "final_population", "concavity"])
        for row in rows:
            w.writerow([row["gmax"], row["seed"], row["final_population"], f"{row['concavity']:.6f}"])
