"""Diffusive chemoattractant lattice, occupancy grid, stimuli and illumination.

Arrays are indexed ``[y, x]`` with ``y = 0`` the bottom row (y-up). A continuous
position ``(x, y)`` lies in cell ``(floor(x), floor(y))``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from numba import njit
from scipy import ndimage

from .params import ConfigError

ATTRACTANT = "attractant"
REPELLENT = "repellent"
ALWAYS = "always"
ON_TOUCH = "on-touch"
CONTACT_NONE = "none"
ANNIHILATE_RESPAWN = "annihilate-respawn"


def new_field(width: int, height: int) -> np.ndarray:
    return np.zeros((height, width), dtype=np.float64)


# Values this small are flushed to zero so long runs never hit subnormal arithmetic.
TINY = 1e-300


@njit(inline="always")
def _box_mean(field, tmp, d_w, d_d):
    # Centred form c + sum(f - c) / D_w**2: every difference is exactly zero in a
    # uniform window, so such cells come out as exactly c * (1 - D_d).
    h, w = field.shape
    r = d_w // 2
    norm = d_w * d_w
    keep = 1.0 - d_d
    tmp[:, :] = field
    for y in range(h):
        for x in range(w):
            c = tmp[y, x]
            s = 0.0
            for dy in range(-r, r + 1):
                yy = y + dy
                for dx in range(-r, r + 1):
                    xx = x + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        s += tmp[yy, xx] - c
                    else:
                        s -= c
            v = (c + s / norm) * keep
            if -TINY < v < TINY:
                v = 0.0
            field[y, x] = v


@njit(cache=True)
def _diffuse_inplace(field, tmp, d_w, d_d):
    # literal window sizes let the inner loops unroll
    if d_w == 3:
        _box_mean(field, tmp, 3, d_d)
    elif d_w == 5:
        _box_mean(field, tmp, 5, d_d)
    else:
        _box_mean(field, tmp, d_w, d_d)


def diffuse(field: np.ndarray, D_w: int, D_d: float) -> np.ndarray:
    """Mean filter of width ``D_w`` (zero outside the lattice, constant divisor
    ``D_w**2``) followed by multiplication with ``1 - D_d``. Returns a new array."""
    if D_w < 3 or D_w % 2 == 0:
        raise ConfigError(f"window must be odd and >= 3, got {D_w}", "D_w")
    if not 0.0 <= D_d <= 1.0:
        raise ConfigError("must lie in [0, 1]", "D_d")
    out = np.array(field, dtype=np.float64, copy=True)
    _diffuse_inplace(out, np.empty_like(out), int(D_w), float(D_d))
    return out


@dataclass
class StimulusNode:
    x: int
    y: int
    polarity: str = ATTRACTANT
    value: float = 0.0
    activation: str = ALWAYS
    active: bool = True
    contact: str = CONTACT_NONE
    contact_radius: float = 3.0
    footprint: float = 0.0  # projection disc radius; 0 projects into the node cell only

    def __post_init__(self):
        if self.polarity not in (ATTRACTANT, REPELLENT):
            raise ConfigError(f"unknown polarity {self.polarity!r}", "polarity")
        if self.activation not in (ALWAYS, ON_TOUCH):
            raise ConfigError(f"unknown activation {self.activation!r}", "activation")
        if self.contact not in (CONTACT_NONE, ANNIHILATE_RESPAWN):
            raise ConfigError(f"unknown contact behaviour {self.contact!r}", "contact")
        if self.polarity == ATTRACTANT and self.value < 0:
            raise ConfigError("attractant projection must be >= 0", "proj_a")
        if self.polarity == REPELLENT and self.value > 0:
            raise ConfigError("repellent projection must be <= 0", "proj_r")
        if self.footprint < 0:
            raise ConfigError("footprint radius must be >= 0", "footprint")
        if self.activation == ON_TOUCH:
            self.active = False

    def footprint_cells(self, width: int, height: int) -> list[tuple[int, int]]:
        r = int(math.floor(self.footprint))
        out = []
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                x, y = self.x + dx, self.y + dy
                if dx * dx + dy * dy <= self.footprint ** 2 and 0 <= x < width and 0 <= y < height:
                    out.append((x, y))
        return out

    @property
    def needs_contact(self) -> bool:
        return self.activation == ON_TOUCH or self.contact == ANNIHILATE_RESPAWN


def check_nodes_in_bounds(nodes: Iterable[StimulusNode], width: int, height: int) -> None:
    for i, n in enumerate(nodes):
        if not (0 <= n.x < width and 0 <= n.y < height):
            raise ConfigError(f"node {i} at ({n.x}, {n.y}) outside {width}x{height} lattice", "nodes")


def project_stimuli(field: np.ndarray, nodes: Sequence[StimulusNode]) -> np.ndarray:
    h, w = field.shape
    check_nodes_in_bounds(nodes, w, h)
    out = np.array(field, dtype=np.float64, copy=True)
    for n in nodes:
        if n.active:
            for x, y in n.footprint_cells(w, h):
                out[y, x] += n.value
    return out


@njit(cache=True)
def _project_inplace(field, cell_x, cell_y, cell_owner, node_value, node_active):
    for i in range(cell_x.shape[0]):
        j = cell_owner[i]
        if node_active[j]:
            field[cell_y[i], cell_x[i]] += node_value[j]


@dataclass
class IlluminationMask:
    """Hazardous (lit) cells. Sensed values are damped near lit cells.

    ``mode="one_minus"`` multiplies by ``1 - L_d``; ``mode="literal"`` by ``L_d``.
    """

    cells: np.ndarray
    L_d: float
    L_w: int = 3
    mode: str = "one_minus"

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=bool)
        if self.L_w < 1 or self.L_w % 2 == 0:
            raise ConfigError(f"window must be odd and >= 1, got {self.L_w}", "L_w")
        if not 0.0 <= self.L_d <= 1.0:
            raise ConfigError("must lie in [0, 1]", "L_d")
        if self.mode not in ("one_minus", "literal"):
            raise ConfigError(f"unknown damping mode {self.mode!r}", "illumination.mode")

    @property
    def factor(self) -> float:
        return 1.0 - self.L_d if self.mode == "one_minus" else self.L_d

    def factor_raster(self) -> np.ndarray:
        """Per-cell multiplier applied to sensed values."""
        near = ndimage.maximum_filter(self.cells.astype(np.uint8), size=self.L_w,
                                      mode="constant", cval=0).astype(bool)
        out = np.ones(self.cells.shape, dtype=np.float64)
        out[near] = self.factor
        return out


def factor_raster(mask: Optional[IlluminationMask], width: int, height: int) -> np.ndarray:
    if mask is None:
        return np.ones((height, width), dtype=np.float64)
    if mask.cells.shape != (height, width):
        raise ConfigError(f"mask shape {mask.cells.shape} != lattice {(height, width)}", "illumination")
    return mask.factor_raster()


@njit(cache=True)
def _sample(field, factor, x, y):
    h, w = field.shape
    if not (x >= 0.0 and y >= 0.0):
        return 0.0
    ix = int(math.floor(x))
    iy = int(math.floor(y))
    if ix >= w or iy >= h:
        return 0.0
    return field[iy, ix] * factor[iy, ix]


def sense_at(field: np.ndarray, mask: Optional[IlluminationMask], pos) -> float:
    h, w = field.shape
    x, y = float(pos[0]), float(pos[1])
    if not (0.0 <= x < w and 0.0 <= y < h):
        return 0.0
    value = float(field[int(math.floor(y)), int(math.floor(x))])
    if mask is None:
        return value
    ix, iy = int(math.floor(x)), int(math.floor(y))
    r = mask.L_w // 2
    window = mask.cells[max(iy - r, 0):iy + r + 1, max(ix - r, 0):ix + r + 1]
    return value * mask.factor if window.any() else value


class OccupancyGrid:
    """Single-occupancy lattice storing particle ids (``-1`` means empty)."""

    EMPTY = -1

    def __init__(self, width: int, height: int, cells: Optional[np.ndarray] = None):
        if cells is None:
            cells = np.full((height, width), self.EMPTY, dtype=np.int64)
        if cells.shape != (height, width):
            raise ValueError("cell array does not match dimensions")
        self.width = width
        self.height = height
        self.cells = cells

    def in_bounds(self, cx: int, cy: int) -> bool:
        return 0 <= cx < self.width and 0 <= cy < self.height

    def is_empty(self, cx: int, cy: int) -> bool:
        return self.cells[cy, cx] == self.EMPTY

    def get(self, cx: int, cy: int) -> int:
        return int(self.cells[cy, cx])

    def insert(self, cx: int, cy: int, pid: int) -> None:
        if not self.is_empty(cx, cy):
            raise ValueError(f"cell ({cx}, {cy}) already holds particle {self.get(cx, cy)}")
        self.cells[cy, cx] = pid

    def remove(self, cx: int, cy: int) -> int:
        pid = self.get(cx, cy)
        self.cells[cy, cx] = self.EMPTY
        return pid

    def occupied(self) -> np.ndarray:
        return self.cells != self.EMPTY

    def count(self) -> int:
        return int(np.count_nonzero(self.cells != self.EMPTY))

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.width, self.height, self.cells.copy())


def to_pgm_bytes(values: np.ndarray, gain: float = 10.0) -> bytes:
    """8-bit binary PGM, ``clamp(round(v * gain), 0, 255)``, top row first."""
    v = np.clip(np.rint(np.asarray(values, dtype=np.float64) * gain), 0, 255).astype(np.uint8)
    h, w = v.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.flipud(v).tobytes()


def write_pgm(path, values: np.ndarray, gain: float = 10.0) -> None:
    Path(path).write_bytes(to_pgm_bytes(values, gain))


def read_pgm(path) -> np.ndarray:
    """Inverse of ``write_pgm`` up to quantisation; returns rows bottom-first."""
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported")
    raster = np.frombuffer(data[m.end(): m.end() + w * h], dtype=np.uint8).reshape(h, w)
    return np.flipud(raster)
