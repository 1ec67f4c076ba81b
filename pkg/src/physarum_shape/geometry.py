"""Planar geometry: convex hull, Euclidean MST, brute-force alpha shapes,
raster boundary tracing, concave-hull extraction and shape metrics.

Raster inputs are boolean arrays indexed ``[y, x]``; a cell is treated as the
lattice point ``(x, y)`` whenever it enters a geometric computation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree


class DegenerateHullError(ValueError):
    """Input has fewer than three non-collinear points (or peripheral nodes)."""


class DisconnectedBlobError(ValueError):
    def __init__(self, components: list[dict]):
        self.components = components
        desc = ", ".join(f"#{c['label']}: {c['size']} cells bbox {c['bbox']}" for c in components)
        super().__init__(f"blob has {len(components)} 8-connected components ({desc})")


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {pts.shape}")
    return pts


def unique_points(points) -> np.ndarray:
    pts = as_points(points)
    _, idx = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(idx)]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass
class Polygon:
    """Counter-clockwise vertex list, closed implicitly."""

    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = as_points(self.vertices)

    def __len__(self):
        return len(self.vertices)

    @property
    def signed_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    @property
    def perimeter(self) -> float:
        d = np.diff(np.vstack([self.vertices, self.vertices[:1]]), axis=0)
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    def edges(self) -> list[tuple[int, int]]:
        n = len(self.vertices)
        return [(i, (i + 1) % n) for i in range(n)]

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        """Inside-or-on test; valid for convex polygons only."""
        pts = as_points(points)
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = ((w[:, 0] - v[:, 0])[None, :] * (pts[:, 1:2] - v[:, 1][None, :])
                 - (w[:, 1] - v[:, 1])[None, :] * (pts[:, 0:1] - v[:, 0][None, :]))
        return np.all(cross >= -tol, axis=1)

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Polygon":
        return cls(np.asarray(data["vertices"], dtype=np.float64).reshape(-1, 2))


def convex_hull(points) -> Polygon:
    """Andrew's monotone chain; collinear boundary points are dropped."""
    pts = unique_points(points)
    if len(pts) < 3:
        raise DegenerateHullError(f"need at least 3 distinct points, got {len(pts)}")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    srt = [tuple(p) for p in pts[order]]

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(srt)
    upper = chain(reversed(srt))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHullError("all points are collinear")
    return Polygon(np.array(hull, dtype=np.float64))


@dataclass
class EdgeList:
    points: np.ndarray
    edges: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.points = as_points(self.points)
        n = len(self.points)
        seen = set()
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"invalid edge ({i}, {j}) for {n} points")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    @property
    def lengths(self) -> np.ndarray:
        if not self.edges:
            return np.zeros(0)
        e = np.asarray(self.edges)
        d = self.points[e[:, 0]] - self.points[e[:, 1]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    def edge_set(self) -> set[tuple[int, int]]:
        return {(min(i, j), max(i, j)) for i, j in self.edges}

    def segments(self) -> np.ndarray:
        """(m, 2, 2) array of segment endpoints."""
        if not self.edges:
            return np.zeros((0, 2, 2))
        e = np.asarray(self.edges)
        return np.stack([self.points[e[:, 0]], self.points[e[:, 1]]], axis=1)

    def to_json(self) -> dict:
        return {"edges": [list(map(int, e)) for e in self.edges], "points": self.points.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "EdgeList":
        return cls(np.asarray(data["points"], dtype=np.float64).reshape(-1, 2),
                   [tuple(e) for e in data["edges"]])


def euclidean_mst(points) -> EdgeList:
    """Kruskal over the complete graph; ties broken by (length, i, j)."""
    pts = as_points(points)
    n = len(pts)
    if n < 2:
        raise ValueError(f"MST needs at least 2 points, got {n}")
    iu, ju = np.triu_indices(n, k=1)
    d = np.hypot(*(pts[iu] - pts[ju]).T)
    order = np.lexsort((ju, iu, d))
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges = []
    for k in order:
        a, b = find(iu[k]), find(ju[k])
        if a != b:
            parent[a] = b
            edges.append((int(iu[k]), int(ju[k])))
            if len(edges) == n - 1:
                break
    return EdgeList(pts, edges)


def alpha_shape_reference(points, alpha: float) -> EdgeList:
    """Brute-force alpha-shape edges with disc radius ``1 / alpha``.

    An edge (a, b) is kept iff one of the two radius-``1/alpha`` discs whose
    boundary passes through a and b has no other point strictly inside. Large
    radii (small alpha) recover the convex hull edges; radii below half the
    closest pair distance give no edges.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    pts = unique_points(points)
    n = len(pts)
    r = 1.0 / alpha
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            a, b = pts[i], pts[j]
            d = float(np.hypot(*(b - a)))
            if d > 2 * r:
                continue
            mid = 0.5 * (a + b)
            h = np.sqrt(max(r * r - 0.25 * d * d, 0.0))
            normal = np.array([a[1] - b[1], b[0] - a[0]]) / d
            others = np.delete(pts, [i, j], axis=0)
            for centre in (mid + h * normal, mid - h * normal):
                if len(others) == 0:
                    edges.append((i, j))
                    break
                dist = np.hypot(*(others - centre).T)
                if np.all(dist >= r * (1 - 1e-12)):
                    edges.append((i, j))
                    break
    return EdgeList(pts, edges)


def diameter(points) -> float:
    pts = as_points(points)
    if len(pts) < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def min_pair_distance(points) -> float:
    pts = unique_points(points)
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(d[:, 1].min())


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    pa, pb = as_points(a), as_points(b)
    if len(pa) == 0 or len(pb) == 0:
        raise ValueError("Hausdorff distance of an empty set is undefined")
    dab, _ = cKDTree(pb).query(pa)
    dba, _ = cKDTree(pa).query(pb)
    return float(max(dab.max(), dba.max()))


def point_segment_distance(points, segments) -> np.ndarray:
    """Distance from each point to the nearest of the given segments, shape (n,)."""
    pts = as_points(points)
    seg = np.asarray(segments, dtype=np.float64).reshape(-1, 2, 2)
    a, b = seg[:, 0][None], seg[:, 1][None]
    ab = b - a
    ap = pts[:, None, :] - a
    denom = (ab ** 2).sum(-1)
    t = np.where(denom > 0, (ap * ab).sum(-1) / np.where(denom > 0, denom, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.sqrt(((pts[:, None, :] - closest) ** 2).sum(-1)).min(axis=1)


def cells_of(mask: np.ndarray) -> np.ndarray:
    ys, xs = np.nonzero(mask)
    return np.column_stack([xs, ys]).astype(np.float64)


def rasterise_convex(polygon: Polygon, shape: tuple[int, int]) -> np.ndarray:
    """Cells whose lattice point lies inside or on a convex polygon."""
    h, w = shape
    v = polygon.vertices
    x0, y0 = np.maximum(np.floor(v.min(axis=0)).astype(int), 0)
    x1, y1 = np.minimum(np.ceil(v.max(axis=0)).astype(int), [w - 1, h - 1])
    out = np.zeros(shape, dtype=bool)
    if x1 < x0 or y1 < y0:
        return out
    gy, gx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    pts = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    out[y0:y1 + 1, x0:x1 + 1] = polygon.contains(pts).reshape(gx.shape)
    return out


def filled_hull_area(mask: np.ndarray) -> int:
    """Number of lattice cells inside or on the convex hull of the blob's cells."""
    pts = cells_of(mask)
    if len(pts) == 0:
        return 0
    try:
        hull = convex_hull(pts)
    except DegenerateHullError:
        # Collinear cells: count the lattice points on the spanning segment.
        span = pts.max(axis=0) - pts.min(axis=0)
        return int(np.gcd(int(span[0]), int(span[1]))) + 1
    return int(rasterise_convex(hull, mask.shape).sum())


@dataclass(frozen=True)
class ShapeMetrics:
    area: int
    perimeter: int
    concavity: float

    def to_json(self) -> dict:
        return {"area": self.area, "perimeter": self.perimeter, "concavity": self.concavity}


def perimeter_cells(mask: np.ndarray) -> np.ndarray:
    """Occupied cells with at least one empty (or off-lattice) 4-neighbour."""
    m = np.pad(np.asarray(mask, dtype=bool), 1)
    inner = m[1:-1, 1:-1]
    all_full = m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    return inner & ~all_full


def shape_metrics(mask: np.ndarray) -> ShapeMetrics:
    mask = np.asarray(mask, dtype=bool)
    area = int(mask.sum())
    if area == 0:
        raise ValueError("shape metrics of an empty blob are undefined")
    hull_area = filled_hull_area(mask)
    return ShapeMetrics(area=area, perimeter=int(perimeter_cells(mask).sum()),
                        concavity=max(0.0, 1.0 - area / hull_area))


def blob_mask(occupied: np.ndarray, close_radius: int = 2, fill_holes: bool = False) -> np.ndarray:
    """Turn a sparse particle raster into a solid blob by morphological closing."""
    occ = np.asarray(occupied, dtype=bool)
    if close_radius <= 0:
        out = occ.copy()
    else:
        r = close_radius
        yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
        disk = xx * xx + yy * yy <= r * r
        padded = np.pad(occ, r + 1)
        closed = ndimage.binary_closing(padded, structure=disk)
        out = closed[r + 1:-(r + 1), r + 1:-(r + 1)] | occ
    if fill_holes:
        out = ndimage.binary_fill_holes(out)
    return out


EIGHT = np.ones((3, 3), dtype=bool)


def components(mask: np.ndarray) -> list[dict]:
    labels, count = ndimage.label(mask, structure=EIGHT)
    out = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        size = int((labels[sl] == lab).sum())
        out.append({"label": lab, "size": size,
                    "bbox": [sl[1].start, sl[0].start, sl[1].stop - 1, sl[0].stop - 1]})
    return out


# Moore neighbourhood, counter-clockwise (y-up) starting from west.
_MOORE = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)]


def trace_boundary(mask: np.ndarray) -> np.ndarray:
    """Moore-neighbour tracing of the outer boundary of an 8-connected blob.

    Starts at the bottom-most, then left-most cell and stops by Jacob's
    criterion. Returns an (m, 2) array of (x, y) cells in traversal order.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        raise ValueError("cannot trace an empty blob")
    h, w = mask.shape
    k0 = np.lexsort((xs, ys))[0]
    start = (int(xs[k0]), int(ys[k0]))

    def filled(c):
        return 0 <= c[0] < w and 0 <= c[1] < h and mask[c[1], c[0]]

    def step_from(cur, back_dir):
        for i in range(1, 9):
            d = (back_dir + i) % 8
            nb = (cur[0] + _MOORE[d][0], cur[1] + _MOORE[d][1])
            if filled(nb):
                # New backtrack: the neighbour examined just before nb, seen from nb.
                prev = (cur[0] + _MOORE[(d - 1) % 8][0], cur[1] + _MOORE[(d - 1) % 8][1])
                off = (prev[0] - nb[0], prev[1] - nb[1])
                return nb, _MOORE.index(off)
        return None, back_dir

    path = [start]
    cur, back = start, 0  # west of the start cell is empty by construction
    first_move = None
    while True:
        nxt, nback = step_from(cur, back)
        if nxt is None:
            break
        if first_move is None:
            first_move = (nxt, nback)
        elif cur == start and (nxt, nback) == first_move:
            break
        path.append(nxt)
        cur, back = nxt, nback
        if len(path) > 8 * mask.size:
            raise RuntimeError("boundary tracing did not terminate")
    if len(path) > 1 and path[-1] == start:
        path.pop()
    return np.array(path, dtype=np.float64)


def extract_concave_hull(mask: np.ndarray, nodes, tol: float = 3.0) -> Polygon:
    """Walk the blob perimeter and join the nodes lying within ``tol`` of it,
    in traversal order, by straight edges."""
    mask = np.asarray(mask, dtype=bool)
    comps = components(mask)
    if len(comps) == 0:
        raise DegenerateHullError("empty blob")
    if len(comps) > 1:
        raise DisconnectedBlobError(comps)
    boundary = trace_boundary(mask)
    pts = as_points(nodes)
    if len(pts) == 0:
        raise DegenerateHullError("no nodes given")
    dist, idx = cKDTree(boundary).query(pts)
    # First visit of each boundary cell defines its position along the walk.
    first_visit = {}
    for k, c in enumerate(map(tuple, boundary)):
        first_visit.setdefault(c, k)
    pos = np.array([first_visit[tuple(boundary[i])] for i in idx])
    keep = np.nonzero(dist <= tol)[0]
    if len(keep) < 3:
        raise DegenerateHullError(f"only {len(keep)} nodes lie on the blob periphery")
    ordered = keep[np.lexsort((keep, pos[keep]))]
    poly = Polygon(pts[ordered])
    if poly.signed_area < 0:
        poly = Polygon(poly.vertices[::-1])
    return poly


def save_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())
