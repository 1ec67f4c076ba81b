"""World state and the per-step scheduler.

One ``World.step()`` runs, in order: stimulus projection, a sensory pass over
all particles in a fresh random order, a motor pass in another fresh random
order, diffusion, the growth test (when ``step_count % G_f == 0``) and the
shrinkage test (when ``step_count % S_f == 0``); then ``step_count`` advances.

Every stochastic draw comes from ``World.rng`` (a numpy ``Generator``) in this
order: sensory permutation, then per visited particle an SO draw (ranged SO
only) and a coin flip (only when both flanks beat the front sensor); motor
permutation, then per visited particle a new heading on a blocked move and the
respawn cell draws on annihilation; growth permutation, then per spawning
particle the spawn slot and its heading; shrinkage permutation.

Particles are stored as parallel arrays sized to the lattice (the population
can never exceed the number of cells).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit

from .agents import Particle, _orient, _readings, _try_move
from .geometry import EdgeList, Polygon, as_points, point_segment_distance, rasterise_convex
from .lattice import (
    ANNIHILATE_RESPAWN, ON_TOUCH, IlluminationMask, OccupancyGrid, StimulusNode,
    _diffuse_inplace, _project_inplace, check_nodes_in_bounds, factor_raster,
)
from .params import ConfigError, ModelParams


class CapacityError(ValueError):
    """Inoculation pattern has fewer free cells than requested particles."""


@njit(cache=True)
def _permutation(n, rng):
    """Fisher-Yates shuffle of ``range(n)`` (faster than Generator.permutation under numba)."""
    out = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        t = out[i]
        out[i] = out[j]
        out[j] = t
    return out


@njit(cache=True)
def _window_count(occ, cx, cy, r):
    h, w = occ.shape
    c = 0
    for y in range(max(cy - r, 0), min(cy + r + 1, h)):
        for x in range(max(cx - r, 0), min(cx + r + 1, w)):
            if occ[y, x] != -1:
                c += 1
    return c


@njit(cache=True)
def _place_random_empty(occ, rng):
    """Uniformly random empty cell as (cx, cy); (-1, -1) when the lattice is full."""
    h, w = occ.shape
    for _ in range(64):
        c = rng.integers(0, w * h)
        if occ[c // w, c % w] == -1:
            return c % w, c // w
    empty = np.empty(w * h, dtype=np.int64)
    m = 0
    for c in range(w * h):
        if occ[c // w, c % w] == -1:
            empty[m] = c
            m += 1
    if m == 0:
        return -1, -1
    c = empty[rng.integers(0, m)]
    return c % w, c // w


@njit(cache=True)
def _respawn(k, px, py, hd, mv, pid, occ, rng):
    cx = int(math.floor(px[k]))
    cy = int(math.floor(py[k]))
    occ[cy, cx] = -1
    nx, ny = _place_random_empty(occ, rng)
    occ[ny, nx] = pid[k]
    px[k] = nx + 0.5
    py[k] = ny + 0.5
    hd[k] = rng.random() * 360.0
    mv[k] = False


@njit(cache=True)
def _growth(occ, px, py, hd, mv, pid, n, next_id, gw, gmin, gmax, count_self, rng):
    h, w = occ.shape
    order = _permutation(n, rng)
    slots = np.empty((8, 2), dtype=np.int64)
    m = n
    r = gw // 2
    for k in order:
        if not mv[k]:
            continue
        cx = int(math.floor(px[k]))
        cy = int(math.floor(py[k]))
        cnt = _window_count(occ, cx, cy, r)
        if not count_self:
            cnt -= 1
        if cnt < gmin or cnt > gmax:
            continue
        e = 0
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                x = cx + dx
                y = cy + dy
                if 0 <= x < w and 0 <= y < h and occ[y, x] == -1:
                    slots[e, 0] = x
                    slots[e, 1] = y
                    e += 1
        if e == 0:
            continue
        j = rng.integers(0, e)
        x = slots[j, 0]
        y = slots[j, 1]
        px[m] = x + 0.5
        py[m] = y + 0.5
        hd[m] = rng.random() * 360.0
        mv[m] = False
        pid[m] = next_id
        occ[y, x] = next_id
        next_id += 1
        m += 1
    return m, next_id


@njit(cache=True)
def _shrinkage(occ, px, py, hd, mv, pid, n, sw, smin, smax, count_self, rng):
    order = _permutation(n, rng)
    alive = np.ones(n, dtype=np.bool_)
    r = sw // 2
    for k in order:
        cx = int(math.floor(px[k]))
        cy = int(math.floor(py[k]))
        cnt = _window_count(occ, cx, cy, r)
        if not count_self:
            cnt -= 1
        if cnt < smin or cnt > smax:
            occ[cy, cx] = -1
            alive[k] = False
    m = 0
    for k in range(n):
        if alive[k]:
            px[m] = px[k]
            py[m] = py[k]
            hd[m] = hd[k]
            mv[m] = mv[k]
            pid[m] = pid[k]
            m += 1
    return m


@njit(cache=True)
def _contact(cx, cy, node_x, node_y, node_r2, node_touch, node_respawn, node_active):
    """Fire contact behaviours for a particle arriving in (cx, cy); True if annihilated."""
    kill = False
    for j in range(node_x.shape[0]):
        if not (node_touch[j] or node_respawn[j]):
            continue
        dx = cx - node_x[j]
        dy = cy - node_y[j]
        if dx * dx + dy * dy <= node_r2[j]:
            if node_touch[j]:
                node_active[j] = True
            if node_respawn[j]:
                kill = True
    return kill


@njit(cache=True)
def _step_kernel(field, tmp, factor, occ, contact_near,
                 px, py, hd, mv, pid, n, next_id,
                 cell_x, cell_y, cell_owner, node_x, node_y, node_value, node_active, node_r2,
                 node_touch, node_respawn,
                 sa, ra, so, so_min, so_max, dep, d_w, d_d,
                 growth, g_f, g_w, g_min, g_max,
                 shrink, s_f, s_w, s_min, s_max,
                 count_self, step_count, rng):
    _project_inplace(field, cell_x, cell_y, cell_owner, node_value, node_active)

    order = _permutation(n, rng)
    for k in order:
        off = so
        if so_min > 0:
            off = float(rng.integers(so_min, so_max + 1))
        fl, f, fr = _readings(field, factor, px[k], py[k], hd[k], sa, off)
        hd[k] = _orient(hd[k], fl, f, fr, ra, rng)

    order = _permutation(n, rng)
    for k in order:
        if _try_move(k, px, py, hd, mv, pid, occ, field, 0.0, rng):
            cx = int(math.floor(px[k]))
            cy = int(math.floor(py[k]))
            if contact_near[cy, cx] and _contact(cx, cy, node_x, node_y, node_r2,
                                                 node_touch, node_respawn, node_active):
                _respawn(k, px, py, hd, mv, pid, occ, rng)
            else:
                field[cy, cx] += dep

    _diffuse_inplace(field, tmp, d_w, d_d)

    if growth and step_count % g_f == 0:
        n, next_id = _growth(occ, px, py, hd, mv, pid, n, next_id,
                             g_w, g_min, g_max, count_self, rng)
    if shrink and step_count % s_f == 0:
        n = _shrinkage(occ, px, py, hd, mv, pid, n, s_w, s_min, s_max, count_self, rng)
    return n, next_id


@njit(cache=True)
def _run_kernel(steps, pop_out, field, tmp, factor, occ, contact_near,
                px, py, hd, mv, pid, n, next_id,
                cell_x, cell_y, cell_owner,
                node_x, node_y, node_value, node_active, node_r2, node_touch, node_respawn,
                sa, ra, so, so_min, so_max, dep, d_w, d_d,
                growth, g_f, g_w, g_min, g_max,
                shrink, s_f, s_w, s_min, s_max,
                count_self, step_count, rng):
    for i in range(steps):
        n, next_id = _step_kernel(field, tmp, factor, occ, contact_near,
                                  px, py, hd, mv, pid, n, next_id,
                                  cell_x, cell_y, cell_owner,
                                  node_x, node_y, node_value, node_active, node_r2,
                                  node_touch, node_respawn,
                                  sa, ra, so, so_min, so_max, dep, d_w, d_d,
                                  growth, g_f, g_w, g_min, g_max,
                                  shrink, s_f, s_w, s_min, s_max,
                                  count_self, step_count + i, rng)
        pop_out[i] = n
    return n, next_id


class World:
    """Lattice fields, particle population, stimuli, parameters and RNG state."""

    def __init__(self, width: int, height: int, params: ModelParams,
                 nodes: Sequence[StimulusNode] = (),
                 illumination: Optional[IlluminationMask] = None,
                 seed: int = 0, count_self: bool = True,
                 growth: Optional[bool] = None, shrink: Optional[bool] = None):
        if width < 1 or height < 1:
            raise ConfigError("lattice dimensions must be positive", "width")
        self.width = width
        self.height = height
        self.params = params
        self.nodes = list(nodes)
        check_nodes_in_bounds(self.nodes, width, height)
        self.illumination = illumination
        self.count_self = count_self
        self.growth = params.growth_enabled if growth is None else growth
        self.shrink = params.shrink_enabled if shrink is None else shrink
        if self.growth and not params.growth_enabled:
            raise ConfigError("growth requested but growth parameters are disabled", "G_f")
        if self.shrink and not params.shrink_enabled:
            raise ConfigError("shrinkage requested but shrinkage parameters are disabled", "S_f")
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.step_count = 0
        self.G_max = params.G_max

        self.field = np.zeros((height, width), dtype=np.float64)
        self._tmp = np.empty_like(self.field)
        self.factor = factor_raster(illumination, width, height)
        self.occ = np.full((height, width), -1, dtype=np.int64)
        cap = width * height
        self.px = np.zeros(cap)
        self.py = np.zeros(cap)
        self.hd = np.zeros(cap)
        self.mv = np.zeros(cap, dtype=np.bool_)
        self.pid = np.zeros(cap, dtype=np.int64)
        self.n = 0
        self.next_id = 0
        self._build_node_arrays()

    def _build_node_arrays(self):
        nodes = self.nodes
        self._node_x = np.array([nd.x for nd in nodes], dtype=np.int64)
        self._node_y = np.array([nd.y for nd in nodes], dtype=np.int64)
        self._node_value = np.array([nd.value for nd in nodes], dtype=np.float64)
        self._node_active = np.array([nd.active for nd in nodes], dtype=np.bool_)
        self._node_r2 = np.array([nd.contact_radius ** 2 for nd in nodes], dtype=np.float64)
        self._node_touch = np.array([nd.activation == ON_TOUCH for nd in nodes], dtype=np.bool_)
        self._node_respawn = np.array([nd.contact == ANNIHILATE_RESPAWN for nd in nodes],
                                      dtype=np.bool_)
        near = np.zeros((self.height, self.width), dtype=np.bool_)
        yy, xx = np.mgrid[0:self.height, 0:self.width]
        for nd in nodes:
            if nd.needs_contact:
                near |= (xx - nd.x) ** 2 + (yy - nd.y) ** 2 <= nd.contact_radius ** 2
        self.contact_near = near
        cells = [(x, y, j) for j, nd in enumerate(nodes)
                 for x, y in nd.footprint_cells(self.width, self.height)]
        # numba needs concrete dtypes even for empty arrays
        cells = np.array(cells, dtype=np.int64).reshape(-1, 3)
        self._cell_x, self._cell_y, self._cell_owner = (np.ascontiguousarray(cells[:, i]) for i in range(3))
        if len(nodes) == 0:
            self._node_x = np.zeros(0, dtype=np.int64)
            self._node_y = np.zeros(0, dtype=np.int64)

    # population access -------------------------------------------------

    @property
    def population(self) -> int:
        return self.n

    @property
    def occupancy(self) -> OccupancyGrid:
        return OccupancyGrid(self.width, self.height, self.occ)

    def cells(self) -> np.ndarray:
        """(n, 2) integer cell coordinates of all particles."""
        return np.column_stack([np.floor(self.px[:self.n]), np.floor(self.py[:self.n])]).astype(np.int64)

    def positions(self) -> np.ndarray:
        return np.column_stack([self.px[:self.n], self.py[:self.n]])

    def headings(self) -> np.ndarray:
        return self.hd[:self.n].copy()

    def particles(self) -> list[Particle]:
        return [Particle(float(self.px[k]), float(self.py[k]), float(self.hd[k]),
                         bool(self.mv[k]), int(self.pid[k])) for k in range(self.n)]

    def occupied_mask(self) -> np.ndarray:
        return self.occ != -1

    def add_particle(self, x: float, y: float, heading: Optional[float] = None) -> int:
        cx, cy = int(math.floor(x)), int(math.floor(y))
        if not (0 <= cx < self.width and 0 <= cy < self.height):
            raise ValueError(f"position ({x}, {y}) outside the lattice")
        if self.occ[cy, cx] != -1:
            raise ValueError(f"cell ({cx}, {cy}) is occupied")
        if heading is None:
            heading = self.rng.random() * 360.0
        k = self.n
        self.px[k], self.py[k], self.hd[k] = x, y, heading % 360.0
        self.mv[k] = False
        self.pid[k] = self.next_id
        self.occ[cy, cx] = self.next_id
        self.next_id += 1
        self.n += 1
        return k

    def remove_particle(self, k: int) -> None:
        if not 0 <= k < self.n:
            raise IndexError(k)
        cx, cy = int(math.floor(self.px[k])), int(math.floor(self.py[k]))
        self.occ[cy, cx] = -1
        for arr in (self.px, self.py, self.hd, self.mv, self.pid):
            arr[k:self.n - 1] = arr[k + 1:self.n]
        self.n -= 1

    # scheduler ------------------------------------------------------------

    def set_param(self, key: str, value) -> None:
        """Mid-run parameter change; only ``G_max`` is supported."""
        if key != "G_max":
            raise ConfigError("only G_max may change during a run", key)
        if not self.growth:
            raise ConfigError("growth is disabled", key)
        if value < self.params.G_min:
            raise ConfigError("G_max below G_min", key)
        self.G_max = int(value)

    def step(self) -> None:
        self.advance(1)

    def advance(self, steps: int) -> np.ndarray:
        """Run ``steps`` scheduler ticks in one compiled call; returns the
        population after each tick."""
        pop = np.zeros(max(steps, 0), dtype=np.int64)
        if steps <= 0:
            return pop
        p = self.params
        ranged = p.so_ranged
        self.n, self.next_id = _run_kernel(
            int(steps), pop,
            self.field, self._tmp, self.factor, self.occ, self.contact_near,
            self.px, self.py, self.hd, self.mv, self.pid, self.n, self.next_id,
            self._cell_x, self._cell_y, self._cell_owner,
            self._node_x, self._node_y, self._node_value, self._node_active, self._node_r2, self._node_touch, self._node_respawn,
            float(p.SA), float(p.RA), float(p.SO or 0.0),
            int(p.SO_min if ranged else 0), int(p.SO_max if ranged else 0),
            float(p.Dep_t), int(p.D_w), float(p.D_d),
            bool(self.growth), int(p.G_f or 1), int(p.G_w or 3), int(p.G_min or 0), int(self.G_max or 0),
            bool(self.shrink), int(p.S_f or 1), int(p.S_w or 3), int(p.S_min or 0), int(p.S_max or 0),
            bool(self.count_self), int(self.step_count), self.rng)
        for nd, active in zip(self.nodes, self._node_active):
            nd.active = bool(active)
        self.step_count += steps
        return pop

    def run(self, steps: int, callback: Optional[Callable[["World"], None]] = None) -> np.ndarray:
        """Advance ``steps`` ticks; with a callback, it is invoked after every tick."""
        if callback is None:
            return self.advance(steps)
        pop = np.zeros(steps, dtype=np.int64)
        for i in range(steps):
            self.advance(1)
            pop[i] = self.n
            callback(self)
        return pop

    def growth_test(self) -> int:
        """Run one growth test immediately; returns the number of spawned particles."""
        p = self.params
        if not p.growth_enabled:
            raise ConfigError("growth parameters are disabled", "G_f")
        before = self.n
        self.n, self.next_id = _growth(self.occ, self.px, self.py, self.hd, self.mv, self.pid,
                                       self.n, self.next_id, p.G_w, p.G_min, self.G_max,
                                       self.count_self, self.rng)
        return self.n - before

    def shrinkage_test(self) -> int:
        """Run one shrinkage test immediately; returns the number of deleted particles."""
        p = self.params
        if not p.shrink_enabled:
            raise ConfigError("shrinkage parameters are disabled", "S_f")
        before = self.n
        self.n = _shrinkage(self.occ, self.px, self.py, self.hd, self.mv, self.pid,
                            self.n, p.S_w, p.S_min, p.S_max, self.count_self, self.rng)
        return before - self.n

    def annihilate_respawn(self, k: int) -> None:
        if not 0 <= k < self.n:
            raise IndexError(k)
        _respawn(k, self.px, self.py, self.hd, self.mv, self.pid, self.occ, self.rng)

    def check_invariants(self) -> None:
        """Raise AssertionError if occupancy and particle arrays disagree."""
        n = self.n
        cells = self.cells()
        assert n <= self.width * self.height
        assert np.all((cells[:, 0] >= 0) & (cells[:, 0] < self.width)
                      & (cells[:, 1] >= 0) & (cells[:, 1] < self.height)), "particle off lattice"
        assert int((self.occ != -1).sum()) == n, "occupied-cell count != population"
        if n:
            assert np.array_equal(self.occ[cells[:, 1], cells[:, 0]], self.pid[:n]), "cell/id mismatch"
        assert len(np.unique(self.pid[:n])) == n, "duplicate particle ids"
        hd = self.hd[:n]
        assert np.all((hd >= 0.0) & (hd < 360.0)), "heading outside [0, 360)"
        assert np.all(np.isfinite(self.field)), "non-finite trail value"


def annihilate_respawn(world: World, k: int, node: StimulusNode) -> None:
    if node.contact != ANNIHILATE_RESPAWN:
        raise ValueError("node does not annihilate on contact")
    world.annihilate_respawn(k)


@dataclass
class InoculationPattern:
    """Where the initial particles go.

    kinds: ``single-site`` (disc of ``radius`` around ``centre`` or node ``site``),
    ``ring`` (annulus of mean ``radius`` and ``thickness`` around ``centre``),
    ``random-everywhere`` (any non-illuminated cell), ``at-nodes`` (discs of
    ``radius`` around every node), ``solid-region`` (cells inside ``polygon``),
    ``on-edges`` (cells within ``thickness / 2`` of the segments of ``edges``).
    """

    kind: str
    centre: Optional[tuple[float, float]] = None
    radius: float = 3.0
    thickness: float = 5.0
    site: Optional[int] = None
    polygon: Optional[Polygon] = None
    edges: Optional[EdgeList] = None
    points: Optional[np.ndarray] = field(default=None, repr=False)

    KINDS = ("single-site", "ring", "random-everywhere", "at-nodes", "solid-region", "on-edges")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown inoculation kind {self.kind!r}", "inoculation.kind")

    def candidate_cells(self, world: World) -> np.ndarray:
        h, w = world.height, world.width
        yy, xx = np.mgrid[0:h, 0:w]
        kind = self.kind
        if kind == "single-site":
            cx, cy = self._centre(world)
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= self.radius ** 2
        elif kind == "ring":
            cx, cy = self._centre(world)
            r = np.hypot(xx - cx, yy - cy)
            mask = np.abs(r - self.radius) <= self.thickness / 2
        elif kind == "random-everywhere":
            mask = world.factor == 1.0
        elif kind == "at-nodes":
            pts = self._node_points(world)
            mask = np.zeros((h, w), dtype=bool)
            for x, y in pts:
                mask |= (xx - x) ** 2 + (yy - y) ** 2 <= self.radius ** 2
        elif kind == "solid-region":
            if self.polygon is None:
                raise ConfigError("solid-region needs a polygon", "inoculation.polygon")
            mask = rasterise_convex(self.polygon, (h, w))
        else:
            if self.edges is None:
                raise ConfigError("on-edges needs an edge list", "inoculation.edges")
            mask = np.zeros((h, w), dtype=bool)
            segs = self.edges.segments()
            lo = np.floor(segs.min(axis=(0, 1)) - self.thickness).astype(int)
            hi = np.ceil(segs.max(axis=(0, 1)) + self.thickness).astype(int)
            x0, y0 = max(lo[0], 0), max(lo[1], 0)
            x1, y1 = min(hi[0], w - 1), min(hi[1], h - 1)
            sub = np.column_stack([xx[y0:y1 + 1, x0:x1 + 1].ravel(), yy[y0:y1 + 1, x0:x1 + 1].ravel()])
            d = point_segment_distance(sub, segs)
            mask[y0:y1 + 1, x0:x1 + 1] = (d <= self.thickness / 2).reshape(y1 - y0 + 1, x1 - x0 + 1)
        return mask & (world.occ == -1)

    def _centre(self, world: World):
        if self.site is not None:
            nd = world.nodes[self.site]
            return nd.x, nd.y
        if self.centre is None:
            return (world.width - 1) / 2, (world.height - 1) / 2
        return self.centre

    def _node_points(self, world: World):
        if self.points is not None:
            return as_points(self.points)
        return np.array([(nd.x, nd.y) for nd in world.nodes], dtype=np.float64).reshape(-1, 2)


def inoculate(pattern: InoculationPattern, world: World, p: Optional[int] = None) -> World:
    """Place ``p`` particles (default ``world.params.p``) on distinct free cells of
    the pattern, chosen uniformly, with random headings."""
    p = world.params.p if p is None else p
    cand = pattern.candidate_cells(world)
    flat = np.flatnonzero(cand.ravel())
    if len(flat) < p:
        raise CapacityError(f"{pattern.kind} pattern has {len(flat)} free cells, needs {p}")
    chosen = world.rng.choice(flat, size=p, replace=False)
    headings = world.rng.random(p) * 360.0
    for c, hd in zip(chosen, headings):
        y, x = divmod(int(c), world.width)
        world.add_particle(x + 0.5, y + 0.5, hd)
    return world
