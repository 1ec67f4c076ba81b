"""Particle sensory and motor behaviour.

Angles are in degrees, counter-clockwise positive with y pointing up. The left
sensor FL sits at ``heading + SA`` and the right sensor FR at ``heading - SA``.
The jitted helpers here are shared by the scheduler kernel and the per-particle
functions used in tests and scripts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .lattice import IlluminationMask, OccupancyGrid, _sample, factor_raster
from .params import ConfigError


@dataclass
class Particle:
    x: float
    y: float
    heading: float = 0.0
    moved_last_step: bool = False
    id: int = 0

    @property
    def cell(self) -> tuple[int, int]:
        return int(math.floor(self.x)), int(math.floor(self.y))


@dataclass(frozen=True)
class SensorConfig:
    SA: float
    RA: float
    SO: Optional[float] = None
    SO_min: Optional[int] = None
    SO_max: Optional[int] = None

    def __post_init__(self):
        for key in ("SA", "RA"):
            if not 0 < getattr(self, key) <= 180:
                raise ConfigError("angle must lie in (0, 180]", key)
        if self.ranged:
            if self.SO_max is None or not 1 <= self.SO_min <= self.SO_max:
                raise ConfigError("need 1 <= SO_min <= SO_max", "SO_min")
        elif self.SO is None or self.SO < 1:
            raise ConfigError("sensor offset must be >= 1", "SO")

    @property
    def ranged(self) -> bool:
        return self.SO_min is not None

    def draw_offset(self, rng: np.random.Generator) -> float:
        if self.ranged:
            return float(rng.integers(self.SO_min, self.SO_max + 1))
        return float(self.SO)


@njit(cache=True)
def _wrap(angle):
    a = angle % 360.0
    if a >= 360.0:  # -tiny % 360 rounds to 360
        a = 0.0
    return a


@njit(cache=True)
def _readings(field, factor, x, y, heading, sa, so):
    a = math.radians(heading)
    b = math.radians(sa)
    ca, sa_ = math.cos(a), math.sin(a)
    cb, sb = math.cos(b), math.sin(b)
    # cos/sin of heading +/- SA by the angle-sum identities
    fl = _sample(field, factor, x + so * (ca * cb - sa_ * sb), y + so * (sa_ * cb + ca * sb))
    f = _sample(field, factor, x + so * ca, y + so * sa_)
    fr = _sample(field, factor, x + so * (ca * cb + sa_ * sb), y + so * (sa_ * cb - ca * sb))
    return fl, f, fr


@njit(cache=True)
def _orient(heading, fl, f, fr, ra, rng):
    if f >= fl and f >= fr:
        return _wrap(heading)
    if fl > f and fr > f:
        if rng.random() < 0.5:
            return _wrap(heading + ra)
        return _wrap(heading - ra)
    if fl > fr:
        return _wrap(heading + ra)
    if fr > fl:
        return _wrap(heading - ra)
    return _wrap(heading)


@njit(cache=True)
def _try_move(k, px, py, hd, mv, pid, occ, field, dep, rng):
    """Single-cell forward move; returns True on success."""
    h, w = occ.shape
    a = math.radians(hd[k])
    nx = px[k] + math.cos(a)
    ny = py[k] + math.sin(a)
    cx = int(math.floor(px[k]))
    cy = int(math.floor(py[k]))
    if nx >= 0.0 and ny >= 0.0:
        ncx = int(math.floor(nx))
        ncy = int(math.floor(ny))
        if ncx < w and ncy < h:
            same = ncx == cx and ncy == cy
            if same or occ[ncy, ncx] == -1:
                if not same:
                    occ[cy, cx] = -1
                    occ[ncy, ncx] = pid[k]
                px[k] = nx
                py[k] = ny
                field[ncy, ncx] += dep
                mv[k] = True
                return True
    hd[k] = rng.random() * 360.0
    mv[k] = False
    return False


def sense(p: Particle, cfg: SensorConfig, field: np.ndarray,
          mask: Optional[IlluminationMask] = None,
          rng: Optional[np.random.Generator] = None,
          offset: Optional[float] = None) -> tuple[float, float, float]:
    """Return the (FL, F, FR) readings. A ranged offset is drawn once from ``rng``."""
    if offset is None:
        if cfg.ranged and rng is None:
            raise ValueError("ranged sensor offset needs an rng")
        offset = cfg.draw_offset(rng)
    h, w = field.shape
    factor = factor_raster(mask, w, h)
    return _readings(field, factor, float(p.x), float(p.y), float(p.heading),
                     float(cfg.SA), float(offset))


def orient(p: Particle, readings, RA: float, rng: np.random.Generator) -> float:
    fl, f, fr = (float(v) for v in readings)
    if not all(math.isfinite(v) for v in (fl, f, fr)):
        raise ValueError(f"non-finite sensor readings {readings}")
    p.heading = _orient(float(p.heading), fl, f, fr, float(RA), rng)
    return p.heading


def attempt_move(p: Particle, occupancy: OccupancyGrid, field: np.ndarray,
                 Dep_t: float, rng: np.random.Generator) -> bool:
    """Move ``p`` one cell forward if the target cell is free, depositing ``Dep_t``."""
    cx, cy = p.cell
    if occupancy.get(cx, cy) != p.id:
        raise ValueError(f"particle {p.id} is not registered at cell {(cx, cy)}")
    px = np.array([p.x], dtype=np.float64)
    py = np.array([p.y], dtype=np.float64)
    hd = np.array([p.heading], dtype=np.float64)
    mv = np.array([p.moved_last_step])
    pid = np.array([p.id], dtype=np.int64)
    moved = _try_move(0, px, py, hd, mv, pid, occupancy.cells, field, float(Dep_t), rng)
    p.x, p.y, p.heading, p.moved_last_step = float(px[0]), float(py[0]), float(hd[0]), bool(mv[0])
    return bool(moved)
