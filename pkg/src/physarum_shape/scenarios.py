"""Named experiment presets, built-in point sets and the scenario runner."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import geometry as geo
from .lattice import (
    ALWAYS, ANNIHILATE_RESPAWN, ATTRACTANT, CONTACT_NONE, ON_TOUCH, REPELLENT,
    IlluminationMask, StimulusNode, diffuse, write_pgm,
)
from .params import ConfigError, ModelParams
from .population import InoculationPattern, World, inoculate


# -- point sets -------------------------------------------------------------

def _stroke(a, b, spacing=10.0):
    a, b = np.asarray(a, float), np.asarray(b, float)
    k = max(int(round(np.hypot(*(b - a)) / spacing)), 1)
    t = np.linspace(0.0, 1.0, k + 1)
    return a + t[:, None] * (b - a)


def _arc(centre, radius, start_deg, stop_deg, spacing):
    span = math.radians(stop_deg - start_deg)
    k = max(int(round(abs(span) * radius / spacing)), 1)
    ang = np.radians(start_deg) + np.linspace(0.0, span, k + 1)
    return np.column_stack([centre[0] + radius * np.cos(ang), centre[1] + radius * np.sin(ang)])


def _dedupe(pts):
    return geo.unique_points(np.rint(pts))


def _letter_h():
    return _dedupe(np.vstack([_stroke((60, 50), (60, 150)), _stroke((140, 50), (140, 150)),
                              _stroke((70, 100), (130, 100))]))


def _letter_c():
    centre = (160, 150)
    return _dedupe(np.vstack([_arc(centre, r, 50, 310, 16) for r in (60, 75, 90)]))


def _letter_a():
    apex, left, right = (100, 160), (50, 40), (150, 40)
    cross_l = (50 + 0.45 * 50, 40 + 0.45 * 120)
    cross_r = (150 - 0.45 * 50, 40 + 0.45 * 120)
    return _dedupe(np.vstack([_stroke(left, apex, 12), _stroke(apex, right, 12)[1:],
                              _stroke(cross_l, cross_r, 12)[1:-1]]))


def _square_4():
    return np.array([[60, 60], [140, 60], [140, 140], [60, 140]], dtype=np.float64)


# Synthetic stand-in for a map of city locations; not taken from any dataset.
_CHINA_CITIES = [
    (250, 230), (232, 205), (214, 222), (196, 200), (236, 178), (214, 160), (246, 140),
    (226, 118), (240, 96), (210, 92), (222, 70), (196, 60), (180, 84), (170, 112),
    (190, 136), (160, 150), (176, 176), (150, 196), (126, 170), (132, 130), (104, 150),
    (110, 112), (140, 96), (120, 70), (92, 86), (70, 120), (76, 160), (50, 140),
    (40, 184), (62, 206),
]


# Irregular cloud used by the hull-band and self-organisation presets.
_SCATTER_20 = [
    (55, 75), (100, 50), (148, 68), (152, 125), (110, 152), (58, 135),
    (100, 100), (84, 92), (116, 90), (94, 118), (120, 116), (80, 110), (104, 80),
    (126, 100), (89, 76), (110, 127), (124, 82), (76, 96), (99, 130), (129, 114),
]


POINTSETS: dict[str, Callable[[], np.ndarray]] = {
    "letter-H": _letter_h,
    "letter-C": _letter_c,
    "letter-A": _letter_a,
    "square-4": _square_4,
    "china-cities": lambda: np.array(_CHINA_CITIES, dtype=np.float64),
    "scatter-20": lambda: np.array(_SCATTER_20, dtype=np.float64),
}


def builtin_pointsets() -> dict[str, np.ndarray]:
    return {name: make() for name, make in POINTSETS.items()}


def pointset(name: str) -> np.ndarray:
    try:
        return POINTSETS[name]()
    except KeyError:
        raise ConfigError(f"unknown point set {name!r}; known: {sorted(POINTSETS)}", "layout.pointset")


# -- scenario records -------------------------------------------------------

@dataclass
class Scenario:
    """Everything needed to reproduce one experiment.

    ``layout`` places stimulus nodes (``pointset`` name or explicit ``points``,
    plus ``polarity``, ``activation``, ``contact``, ``contact_radius``).
    ``region`` optionally defines a measurement region (cells within ``radius``
    of a node); ``illumination`` lights everything outside that region.
    ``inoculation`` names an inoculation kind and its geometry.
    """

    name: str
    params: ModelParams
    width: int = 200
    height: int = 200
    layout: dict = field(default_factory=dict)
    region: Optional[dict] = None
    illumination: Optional[dict] = None
    inoculation: dict = field(default_factory=lambda: {"kind": "random-everywhere"})
    steps: int = 10000
    early_stop: bool = False
    gmax_schedule: list = field(default_factory=list)
    sweep: Optional[dict] = None
    output: dict = field(default_factory=dict)
    count_self: bool = True
    trail_warmup: int = 0

    def __post_init__(self):
        self.output = {**DEFAULT_OUTPUT, **self.output}

    def validate(self) -> "Scenario":
        p = self.params
        if self.width < 1 or self.height < 1:
            raise ConfigError("lattice dimensions must be positive", "width")
        if self.steps < 0:
            raise ConfigError("step budget must be >= 0", "steps")
        if self.trail_warmup < 0:
            raise ConfigError("trail warm-up must be >= 0", "trail_warmup")
        pts = self.points()
        polarity = self.layout.get("polarity", ATTRACTANT)
        if len(pts):
            if polarity == ATTRACTANT and p.proj_a is None:
                raise ConfigError("attractant nodes need proj_a", "proj_a")
            if polarity == REPELLENT and p.proj_r is None:
                raise ConfigError("repellent nodes need proj_r", "proj_r")
            if np.any(pts < 0) or np.any(pts[:, 0] >= self.width) or np.any(pts[:, 1] >= self.height):
                raise ConfigError("node outside the lattice", "layout")
        if self.illumination is not None:
            if not p.illumination_enabled:
                raise ConfigError("illumination requested but L_w/L_d are disabled", "L_w")
            if self.region is None:
                raise ConfigError("illumination needs a region to leave unlit", "region")
        for step, value in self.gmax_schedule:
            if not p.growth_enabled:
                raise ConfigError("G_max schedule given but growth is disabled", "gmax_schedule")
            if step < 0 or value < p.G_min:
                raise ConfigError(f"bad schedule entry ({step}, {value})", "gmax_schedule")
        if self.sweep is not None:
            key = self.sweep.get("key")
            if key != "G_max":
                raise ConfigError("only G_max sweeps are supported", "sweep.key")
            if not p.growth_enabled:
                raise ConfigError("G_max sweep requires growth", "sweep")
            if not self.sweep.get("values"):
                raise ConfigError("sweep needs values", "sweep.values")
        InoculationPattern(self.inoculation.get("kind", "?"))
        return self

    def points(self) -> np.ndarray:
        if "points" in self.layout:
            return geo.as_points(self.layout["points"])
        if "pointset" in self.layout:
            return pointset(self.layout["pointset"])
        return np.zeros((0, 2))

    def nodes(self) -> list[StimulusNode]:
        lay = self.layout
        polarity = lay.get("polarity", ATTRACTANT)
        value = self.params.proj_a if polarity == ATTRACTANT else self.params.proj_r
        return [StimulusNode(int(x), int(y), polarity=polarity, value=float(value),
                             activation=lay.get("activation", ALWAYS),
                             contact=lay.get("contact", CONTACT_NONE),
                             contact_radius=float(lay.get("contact_radius", 3.0)),
                             footprint=float(lay.get("node_radius", 0.0)))
                for x, y in self.points()]

    def region_mask(self) -> Optional[np.ndarray]:
        if self.region is None:
            return None
        if self.region.get("kind", "near-nodes") != "near-nodes":
            raise ConfigError(f"unknown region kind {self.region.get('kind')!r}", "region.kind")
        r = float(self.region.get("radius", 8.0))
        yy, xx = np.mgrid[0:self.height, 0:self.width]
        mask = np.zeros((self.height, self.width), dtype=bool)
        for x, y in self.points():
            mask |= (xx - x) ** 2 + (yy - y) ** 2 <= r * r
        return mask

    def steps_for(self, value) -> int:
        if self.sweep is None:
            return self.steps
        per = self.sweep.get("steps", {})
        return int(per.get(str(value), self.steps))

    def variants(self) -> list["Scenario"]:
        """Expand a sweep into one scenario per value (itself when not a sweep)."""
        if self.sweep is None:
            return [self]
        out = []
        for v in self.sweep["values"]:
            out.append(replace(self, name=f"{self.name}-gmax{v}",
                               params=self.params.with_overrides(G_max=v),
                               steps=self.steps_for(v), sweep=None))
        return out


DEFAULT_OUTPUT = {"frames_every": 0, "display_gain": 10.0, "close_radius": 2,
                  "checkpoint_every": 100}


# -- presets ----------------------------------------------------------------

def _column(**kw) -> ModelParams:
    return ModelParams(**kw)


_H_PARAMS = dict(p=10, SA=22.5, RA=45, SO=5, Dep_t=5, D_w=5, D_d=0.1, proj_a=12.75, L_w=3, L_d=0.9,
                 G_f=3, G_w=9, G_min=0, G_max=15, S_f=3, S_w=5, S_min=0, S_max=24)
_MST_GROWTH = dict(p=1000, SA=90, RA=45, SO=None, SO_min=1, SO_max=19, Dep_t=5, D_w=3, D_d=0.05,
                   proj_a=5, G_f=3, G_w=9, G_min=0, G_max=20, S_f=10, S_w=9, S_min=0, S_max=80)

PARAM_COLUMNS: dict[str, dict] = {
    "h-mask": _H_PARAMS,
    "h-nomask": _H_PARAMS,
    "hull-band-attract": dict(p=800, SA=45, RA=45, SO=5, Dep_t=15, D_w=3, D_d=0.1, proj_a=127),
    "hull-band-repel": dict(p=1000, SA=60, RA=60, SO=5, Dep_t=15, D_w=3, D_d=0.1, proj_r=-127),
    "hull-self-organise": dict(p=3000, SA=45, RA=45, SO=9, Dep_t=0.01, D_w=3, D_d=0.07, proj_r=-127),
    "concave-shrink": dict(p=18000, SA=60, RA=60, SO=7, Dep_t=5, D_w=3, D_d=0.05, proj_a=2.55,
                           G_f=3, G_w=9, G_min=0, G_max=20, S_f=50, S_w=9, S_min=0, S_max=80),
    "alpha-growth": dict(p=1000, SA=60, RA=60, SO=13, Dep_t=5, D_w=3, D_d=0.1, proj_a=2.55,
                         G_f=5, G_w=9, G_min=0, G_max=30, S_f=50, S_w=9, S_min=0, S_max=80),
    "concave-mst": _MST_GROWTH,
    "square-mst": _MST_GROWTH,
    "gmax-sweep": _MST_GROWTH,
}

GMAX_SWEEP = [5, 10, 20, 25, 30]


def _preset_defs() -> dict[str, Scenario]:
    col = {k: _column(**v) for k, v in PARAM_COLUMNS.items()}
    h_layout = {"pointset": "letter-H", "polarity": ATTRACTANT, "activation": ALWAYS}
    h_region = {"kind": "near-nodes", "radius": 8}
    h_inoc = {"kind": "single-site", "site": 0, "radius": 3}
    band_inoc = {"kind": "ring", "centre": [100, 100], "radius": 80, "thickness": 5}
    mst_inoc = {"kind": "on-edges", "edges": "mst", "thickness": 5}
    return {
        "h-mask": Scenario("h-mask", col["h-mask"], layout=h_layout, region=h_region,
                           illumination={"mode": "one_minus"}, inoculation=h_inoc),
        "h-nomask": Scenario("h-nomask", col["h-nomask"], layout=h_layout, region=h_region,
                             inoculation=h_inoc),
        "hull-band-attract": Scenario(
            "hull-band-attract", col["hull-band-attract"],
            layout={"pointset": "scatter-20", "polarity": ATTRACTANT, "activation": ON_TOUCH},
            inoculation=band_inoc, early_stop=True),
        "hull-band-repel": Scenario(
            "hull-band-repel", col["hull-band-repel"],
            layout={"pointset": "scatter-20", "polarity": REPELLENT, "activation": ALWAYS,
                    "node_radius": 1},
            inoculation=band_inoc, early_stop=True),
        "hull-self-organise": Scenario(
            "hull-self-organise", col["hull-self-organise"],
            layout={"pointset": "scatter-20", "polarity": REPELLENT, "activation": ALWAYS,
                    "contact": ANNIHILATE_RESPAWN},
            inoculation={"kind": "random-everywhere"}, steps=20000),
        "concave-shrink": Scenario(
            "concave-shrink", col["concave-shrink"], width=300, height=300,
            layout={"pointset": "letter-C", "polarity": ATTRACTANT},
            inoculation={"kind": "solid-region", "polygon": "hull"}, steps=30000,
            early_stop=True, trail_warmup=100),
        "alpha-growth": Scenario(
            "alpha-growth", col["alpha-growth"],
            layout={"pointset": "letter-A", "polarity": ATTRACTANT},
            inoculation={"kind": "at-nodes", "radius": 4}, early_stop=True),
        "concave-mst": Scenario(
            "concave-mst", col["concave-mst"], width=300, height=300,
            layout={"pointset": "china-cities", "polarity": ATTRACTANT},
            inoculation=mst_inoc, early_stop=True),
        "square-mst": Scenario(
            "square-mst", col["square-mst"], layout={"pointset": "square-4", "polarity": ATTRACTANT},
            inoculation=mst_inoc, steps=5000),
        "gmax-sweep": Scenario(
            "gmax-sweep", col["gmax-sweep"].with_overrides(G_max=GMAX_SWEEP[0]),
            layout={"pointset": "square-4", "polarity": ATTRACTANT},
            inoculation=mst_inoc, steps=5000,
            sweep={"key": "G_max", "values": list(GMAX_SWEEP), "steps": {"30": 3000}}),
    }


def preset_catalogue() -> list[Scenario]:
    return [s.validate() for s in _preset_defs().values()]


def preset(name: str) -> Scenario:
    defs = _preset_defs()
    if name not in defs:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(defs)}", "preset")
    return defs[name].validate()


# -- building and running ---------------------------------------------------

def inoculation_pattern(scenario: Scenario) -> InoculationPattern:
    spec = dict(scenario.inoculation)
    kind = spec.pop("kind")
    pts = scenario.points()
    kw: dict[str, Any] = {}
    if "centre" in spec:
        kw["centre"] = tuple(spec.pop("centre"))
    for key in ("radius", "thickness"):
        if key in spec:
            kw[key] = float(spec.pop(key))
    if "site" in spec:
        kw["site"] = int(spec.pop("site"))
    if "polygon" in spec:
        poly = spec.pop("polygon")
        kw["polygon"] = geo.convex_hull(pts) if poly == "hull" else geo.Polygon(poly)
    if "edges" in spec:
        edges = spec.pop("edges")
        kw["edges"] = geo.euclidean_mst(pts) if edges == "mst" else geo.EdgeList(pts, [tuple(e) for e in edges])
    if spec:
        raise ConfigError(f"unknown inoculation keys {sorted(spec)}", "inoculation")
    return InoculationPattern(kind, **kw)


def build_world(scenario: Scenario, seed: int) -> World:
    scenario.validate()
    mask = None
    if scenario.illumination is not None:
        p = scenario.params
        mask = IlluminationMask(~scenario.region_mask(), L_d=p.L_d, L_w=p.L_w,
                                mode=scenario.illumination.get("mode", "one_minus"))
    world = World(scenario.width, scenario.height, scenario.params, nodes=scenario.nodes(),
                  illumination=mask, seed=seed, count_self=scenario.count_self)
    inoculate(inoculation_pattern(scenario), world)
    if scenario.trail_warmup:
        warm_trail(world, scenario.trail_warmup)
    return world


def warm_trail(world: World, passes: int) -> None:
    """Pre-condition the trail: each pass deposits ``Dep_t`` under every particle
    and diffuses, with no particle motion and no random draws."""
    p = world.params
    deposit = world.occupied_mask() * float(p.Dep_t)
    f = world.field
    for _ in range(passes):
        f = diffuse(f + deposit, p.D_w, p.D_d)
    world.field[:] = f


def relative_range(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    if len(v) == 0:
        return 0.0
    top = np.abs(v).max()
    return float((v.max() - v.min()) / top) if top > 0 else 0.0


def is_stable(series, window: int = 1000, tol: float = 0.01) -> bool:
    """True when the last ``window`` steps vary by less than ``tol`` (relative range)."""
    s = np.asarray(series)
    if len(s) < window + 1:
        return False
    return relative_range(s[-(window + 1):]) < tol


def cloud_hull_area(cells: np.ndarray) -> float:
    try:
        return geo.convex_hull(cells).area
    except geo.DegenerateHullError:
        return 0.0


@dataclass
class ScenarioResult:
    scenario: Scenario
    seed: int
    steps_run: int
    population: np.ndarray
    cells: np.ndarray
    nodes: np.ndarray
    node_active: np.ndarray
    blob: np.ndarray
    checkpoints: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    converged: bool = False
    world: Optional[World] = field(default=None, repr=False)

    @property
    def final_population(self) -> int:
        return int(self.population[-1])


def run_scenario(scenario: Scenario, seed: int, out_dir=None, steps: Optional[int] = None,
                 frames_every: Optional[int] = None, early_stop: Optional[bool] = None,
                 keep_world: bool = False) -> ScenarioResult:
    """Build, inoculate and step a scenario; optionally write frames into ``out_dir``.

    Sweep scenarios must be expanded with ``Scenario.variants()`` first.
    """
    if scenario.sweep is not None:
        raise ConfigError("expand sweeps with Scenario.variants() before running", "sweep")
    world = build_world(scenario, seed)
    budget = scenario.steps if steps is None else steps
    stop_early = scenario.early_stop if early_stop is None else early_stop
    frames = scenario.output["frames_every"] if frames_every is None else frames_every
    gain = scenario.output["display_gain"]
    every = int(scenario.output["checkpoint_every"])
    schedule = sorted((int(s), int(v)) for s, v in scenario.gmax_schedule)

    frame_dir = None
    if out_dir is not None and frames:
        frame_dir = Path(out_dir) / "frames"
        (frame_dir / "trail").mkdir(parents=True, exist_ok=True)
        (frame_dir / "occupancy").mkdir(parents=True, exist_ok=True)

    def write_frame():
        if frame_dir is None:
            return
        name = f"frame_{world.step_count:07d}.pgm"
        write_pgm(frame_dir / "trail" / name, world.field, gain)
        write_pgm(frame_dir / "occupancy" / name, world.occupied_mask() * 255.0, 1.0)

    pop = [world.population]
    checkpoints = [(0, world.population, cloud_hull_area(world.cells()))]
    write_frame()
    converged = False
    t = 0
    while t < budget:
        for s, v in schedule:
            if s == t:
                world.set_param("G_max", v)
        stops = [budget, (t // every + 1) * every]
        if frames:
            stops.append((t // frames + 1) * frames)
        stops += [s for s, _ in schedule if s > t]
        nxt = min(stops)
        pop.extend(world.advance(nxt - t).tolist())
        t = nxt
        if t % every == 0:
            checkpoints.append((t, world.population, cloud_hull_area(world.cells())))
        if frames and t % frames == 0:
            write_frame()
        if stop_early and t % every == 0 and _converged(pop, checkpoints, every):
            converged = True
            break
    if frames and t % frames != 0:
        write_frame()
    if not converged:
        converged = _converged(pop, checkpoints, every)

    cells = world.cells()
    nodes = scenario.points()
    blob = geo.blob_mask(world.occupied_mask(), scenario.output["close_radius"])
    result = ScenarioResult(scenario=scenario, seed=seed, steps_run=t,
                            population=np.asarray(pop, dtype=np.int64), cells=cells,
                            nodes=nodes, node_active=np.array([n.active for n in world.nodes]),
                            blob=blob, checkpoints=checkpoints, converged=converged,
                            world=world if keep_world else None)
    result.metrics = compute_metrics(result, world)
    return result


def _converged(pop, checkpoints, every) -> bool:
    """Population stable over the last 1000 steps and the mean cloud-hull area
    of that window within 1% of the preceding window's mean."""
    window = 1000
    if not is_stable(pop, window):
        return False
    k = window // every
    areas = np.array([a for _, _, a in checkpoints[1:]], dtype=np.float64)
    if len(areas) < 2 * k:
        return False
    last, prev = areas[-k:].mean(), areas[-2 * k:-k].mean()
    return prev > 0 and abs(last - prev) / prev < 0.01


def compute_metrics(result: ScenarioResult, world: Optional[World] = None) -> dict:
    sc = result.scenario
    out: dict[str, Any] = {
        "steps_run": result.steps_run,
        "final_population": result.final_population,
        "converged": bool(result.converged),
        "population_stable": is_stable(result.population),
    }
    if result.blob.any():
        out["blob"] = geo.shape_metrics(result.blob).to_json()
        out["blob_components"] = len(geo.components(result.blob))
    region = sc.region_mask()
    if region is not None and len(result.cells):
        c = result.cells
        out["in_region_fraction"] = float(region[c[:, 1], c[:, 0]].mean())
    nodes = result.nodes
    if len(nodes) >= 3 and len(result.cells) >= 3:
        out.update(hull_comparison(result.cells, nodes))
    if len(nodes) >= 3 and sc.layout.get("contact") == ANNIHILATE_RESPAWN:
        out.update(hull_density_contrast(result.cells, nodes, result.blob.shape))
    if len(nodes):
        out["nodes_touched"] = int(result.node_active.sum()) if sc.layout.get("activation") == ON_TOUCH else None
        nx, ny = nodes[:, 0].astype(int), nodes[:, 1].astype(int)
        out["node_coverage"] = float(result.blob[ny, nx].mean())
    return out


def hull_comparison(cells: np.ndarray, nodes: np.ndarray) -> dict:
    """Emergent (particle-cloud) convex hull against the oracle hull of the nodes."""
    out: dict[str, Any] = {}
    try:
        emergent = geo.convex_hull(cells)
        oracle = geo.convex_hull(nodes)
    except geo.DegenerateHullError:
        return out
    out["hausdorff_hull_vertices"] = geo.hausdorff(emergent.vertices, oracle.vertices)
    out["emergent_hull_area"] = emergent.area
    out["oracle_hull_area"] = oracle.area
    out["nodes_in_emergent_hull"] = float(emergent.contains(nodes).mean())
    out["max_node_outside_distance"] = float(_outside_distance(emergent, nodes).max())
    return out


def hull_density_contrast(cells: np.ndarray, nodes: np.ndarray, shape: tuple[int, int],
                          inset: float = 10.0, ring: float = 20.0) -> dict:
    """Particle density deep inside the node hull against a ring just outside it.

    Interior: cells inside the hull and at least ``inset`` from its boundary.
    Exterior ring: cells outside the hull within ``ring`` of its boundary.
    """
    hull = geo.convex_hull(nodes)
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    grid = np.column_stack([xx.ravel(), yy.ravel()]).astype(np.float64)
    v = hull.vertices
    d = geo.point_segment_distance(grid, np.stack([v, np.roll(v, -1, axis=0)], axis=1))
    inside = hull.contains(grid)
    interior = (inside & (d >= inset)).reshape(h, w)
    exterior = (~inside & (d <= ring)).reshape(h, w)
    occ = np.zeros((h, w), dtype=bool)
    if len(cells):
        occ[cells[:, 1], cells[:, 0]] = True
    di, de = float(occ[interior].mean()), float(occ[exterior].mean())
    return {"interior_density": di, "exterior_density": de,
            "density_ratio": di / de if de > 0 else float("inf")}


def _outside_distance(poly: geo.Polygon, points) -> np.ndarray:
    """Distance from each point to the polygon (0 inside or on it)."""
    pts = geo.as_points(points)
    inside = poly.contains(pts)
    v = poly.vertices
    segs = np.stack([v, np.roll(v, -1, axis=0)], axis=1)
    d = geo.point_segment_distance(pts, segs)
    return np.where(inside, 0.0, d)
