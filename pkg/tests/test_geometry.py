import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from physarum_shape import geometry as geo

from oracles import brute_hausdorff, brute_hull_vertices, exhaustive_mst_length, hull_raster_cells


def square(n=10):
    m = np.zeros((n + 4, n + 4), dtype=bool)
    m[2:2 + n, 2:2 + n] = True
    return m


def disc(r, size=None):
    size = size or 2 * r + 7
    c = size // 2
    yy, xx = np.mgrid[0:size, 0:size]
    return (xx - c) ** 2 + (yy - c) ** 2 <= r * r, c


# -- convex hull --------------------------------------------------------------

def test_hull_unit_square():
    h = geo.convex_hull([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert {tuple(v) for v in h.vertices} == {(0, 0), (1, 0), (1, 1), (0, 1)}
    assert h.signed_area > 0


def test_hull_drops_interior_and_collinear():
    pts = [(0, 0), (2, 0), (2, 2), (0, 2), (1, 1), (1, 0)]
    h = geo.convex_hull(pts)
    assert {tuple(v) for v in h.vertices} == {(0, 0), (2, 0), (2, 2), (0, 2)}


@pytest.mark.parametrize("pts", [[(0, 0), (1, 1)], [(0, 0), (1, 1), (2, 2), (3, 3)], [(1, 1)] * 5])
def test_hull_degenerate(pts):
    with pytest.raises(geo.DegenerateHullError):
        geo.convex_hull(pts)


def test_hull_matches_brute_force_50_points():
    rng = np.random.default_rng(5)
    pts = rng.random((50, 2)) * 100
    h = geo.convex_hull(pts)
    assert {tuple(v) for v in h.vertices} == brute_hull_vertices(pts)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=3, max_size=40))
def test_hull_contains_inputs_and_is_minimal(pts):
    try:
        h = geo.convex_hull(pts)
    except geo.DegenerateHullError:
        return
    assert h.contains(np.array(pts, float)).all()
    v = h.vertices
    for i in range(len(v)):
        if len(v) == 3:
            break
        reduced = geo.Polygon(np.delete(v, i, axis=0))
        assert not reduced.contains(np.array(pts, float)).all()


# -- MST ------------------------------------------------------------------------

def test_mst_two_points():
    e = geo.euclidean_mst([(0, 0), (3, 4)])
    assert e.edges == [(0, 1)]
    assert e.total_length == 5.0


def test_mst_square_tie_break():
    e = geo.euclidean_mst([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert e.total_length == pytest.approx(3.0)
    assert e.edges == [(0, 1), (0, 3), (1, 2)]
    assert geo.euclidean_mst([(0, 0), (1, 0), (1, 1), (0, 1)]).edges == e.edges


def test_mst_rejects_single_point():
    with pytest.raises(ValueError):
        geo.euclidean_mst([(0, 0)])


@pytest.mark.parametrize("seed", range(5))
def test_mst_matches_exhaustive(seed):
    pts = np.random.default_rng(seed).random((7, 2)) * 50
    e = geo.euclidean_mst(pts)
    assert len(e.edges) == 6
    assert e.total_length == pytest.approx(exhaustive_mst_length(pts), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10_000))
def test_mst_is_spanning_tree(n, seed):
    pts = np.random.default_rng(seed).random((n, 2))
    e = geo.euclidean_mst(pts)
    assert len(e.edges) == n - 1
    adj = {i: set() for i in range(n)}
    for i, j in e.edges:
        adj[i].add(j)
        adj[j].add(i)
    seen, stack = {0}, [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    assert len(seen) == n  # connected with n-1 edges => acyclic


# -- alpha shapes -------------------------------------------------------------------

def test_alpha_tiny_radius_is_empty():
    pts = np.random.default_rng(1).random((15, 2)) * 40
    r = 0.49 * geo.min_pair_distance(pts)
    assert geo.alpha_shape_reference(pts, 1 / r).edges == []


def test_alpha_huge_radius_contains_hull_edges():
    pts = np.random.default_rng(2).random((15, 2)) * 40
    hull = geo.convex_hull(pts)
    edges = geo.alpha_shape_reference(pts, 1 / (1e4 * geo.diameter(pts))).edge_set()
    pts_u = geo.unique_points(pts)
    index = {tuple(p): i for i, p in enumerate(pts_u)}
    for a, b in hull.edges():
        i, j = index[tuple(hull.vertices[a])], index[tuple(hull.vertices[b])]
        assert (min(i, j), max(i, j)) in edges


def test_alpha_triangle_just_above_circumradius():
    pts = np.array([(0.0, 0.0), (4.0, 0.0), (1.0, 3.0)])
    a, b, c = (np.linalg.norm(pts[i] - pts[j]) for i, j in ((0, 1), (1, 2), (2, 0)))
    u, v = pts[1] - pts[0], pts[2] - pts[0]
    area = 0.5 * abs(u[0] * v[1] - u[1] * v[0])
    circumradius = a * b * c / (4 * area)
    e = geo.alpha_shape_reference(pts, 1 / (circumradius * 1.001))
    assert e.edge_set() == {(0, 1), (1, 2), (0, 2)}


def test_alpha_radius_equal_to_diameter_can_miss_a_hull_edge():
    # A point hugging a long hull edge sits inside the outward disc's cap when the
    # radius is only the diameter; the hull edge then drops out.
    pts = np.array([(0.0, 0.0), (10.0, 0.0), (5.0, 0.5), (5.0, 8.0)])
    e = geo.alpha_shape_reference(pts, 1 / geo.diameter(pts))
    assert (0, 1) not in e.edge_set()
    e_far = geo.alpha_shape_reference(pts, 1 / (200 * geo.diameter(pts)))
    assert (0, 1) in e_far.edge_set()


# -- boundary tracing / concave hull --------------------------------------------------

def boundary_set(mask):
    return {tuple(map(int, c)) for c in geo.cells_of(geo.perimeter_cells(mask))}


@pytest.mark.parametrize("mask", [
    square(10),
    disc(9)[0],
    np.pad(np.tril(np.ones((12, 12), bool)), 2),
    np.pad(np.ones((1, 8), bool), 2),
    np.pad(np.eye(6, dtype=bool), 2),
])
def test_trace_visits_exactly_the_boundary(mask):
    traced = {tuple(map(int, c)) for c in geo.trace_boundary(mask)}
    assert traced == boundary_set(mask)


def test_trace_single_cell():
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    assert geo.trace_boundary(m).tolist() == [[2.0, 2.0]]


def test_extract_square():
    m = square(10)
    nodes = [(2, 2), (11, 2), (11, 11), (2, 11)]
    poly = geo.extract_concave_hull(m, nodes)
    assert len(poly) == 4
    assert {tuple(v) for v in poly.vertices} == set(nodes)
    assert poly.signed_area > 0


def cyclic_equal(a, b):
    a, b = [tuple(x) for x in a], [tuple(x) for x in b]
    if len(a) != len(b):
        return False
    k = b.index(a[0]) if a[0] in b else -1
    return k >= 0 and b[k:] + b[:k] == a


def test_extract_disc_hexagon_in_rim_order():
    m, c = disc(20)
    ang = np.radians([0, 60, 120, 180, 240, 300])
    nodes = np.rint(np.column_stack([c + 20 * np.cos(ang), c + 20 * np.sin(ang)]))
    shuffled = nodes[[3, 0, 5, 1, 4, 2]]
    poly = geo.extract_concave_hull(m, shuffled)
    assert cyclic_equal(poly.vertices, nodes)  # CCW rim order regardless of input order


def test_extract_filled_hull_matches_convex_hull():
    rng = np.random.default_rng(3)
    hull_pts = np.array([(20, 20), (80, 25), (90, 70), (50, 95), (15, 60)], float)
    interior = np.array([(50, 55), (45, 45), (60, 60)], float)
    pts = np.vstack([hull_pts, interior])
    rng.shuffle(pts)
    blob = geo.rasterise_convex(geo.convex_hull(pts), (110, 110))
    poly = geo.extract_concave_hull(blob, pts)
    assert cyclic_equal(poly.vertices, geo.convex_hull(pts).vertices)


def test_extract_disconnected_reports_components():
    m = np.zeros((20, 20), bool)
    m[2:5, 2:5] = True
    m[10:15, 10:15] = True
    with pytest.raises(geo.DisconnectedBlobError) as err:
        geo.extract_concave_hull(m, [(2, 2), (4, 4), (10, 10)])
    assert len(err.value.components) == 2
    assert sorted(c["size"] for c in err.value.components) == [9, 25]


def test_extract_without_peripheral_nodes_is_degenerate():
    with pytest.raises(geo.DegenerateHullError):
        geo.extract_concave_hull(square(20), [(11, 11), (12, 12)])


# -- metrics ----------------------------------------------------------------------------

def test_metrics_square():
    m = geo.shape_metrics(square(10))
    assert (m.area, m.perimeter, m.concavity) == (100, 36, 0.0)


def test_metrics_single_cell():
    one = np.zeros((3, 3), bool)
    one[1, 1] = True
    m = geo.shape_metrics(one)
    assert (m.area, m.perimeter, m.concavity) == (1, 1, 0.0)


def test_metrics_corner_bite_against_oracle():
    m = square(10)
    m[8:12, 8:12] = False  # 4x4 bite from the top-right corner
    hull_cells = hull_raster_cells(m)
    assert hull_cells == 90  # 84 blob cells plus 6 bite cells on or below the new diagonal
    assert geo.shape_metrics(m).concavity == pytest.approx(1 - 84 / hull_cells, abs=1e-12)


def test_metrics_empty_rejected():
    with pytest.raises(ValueError):
        geo.shape_metrics(np.zeros((4, 4), bool))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20))
def test_rectangles_have_zero_concavity(w, h):
    m = np.zeros((h + 2, w + 2), bool)
    m[1:1 + h, 1:1 + w] = True
    assert geo.shape_metrics(m).concavity == 0.0


@pytest.mark.parametrize("r", [5, 12, 25, 40])
def test_raster_discs_nearly_convex(r):
    assert geo.shape_metrics(disc(r)[0]).concavity <= 0.05


# -- Hausdorff -----------------------------------------------------------------------------

def test_hausdorff_trivial():
    assert geo.hausdorff([(0, 0), (1, 1)], [(1, 1), (0, 0)]) == 0.0
    assert geo.hausdorff([(0, 0)], [(3, 4)]) == 5.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**31))
def test_hausdorff_matches_brute_force(na, nb, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random((na, 2)) * 30, rng.random((nb, 2)) * 30
    assert geo.hausdorff(a, b) == pytest.approx(brute_hausdorff(a, b), rel=1e-12)


def test_hausdorff_empty_rejected():
    with pytest.raises(ValueError):
        geo.hausdorff([], [(0, 0)])


# -- JSON ------------------------------------------------------------------------------------

def test_json_round_trip(tmp_path):
    poly = geo.convex_hull([(0, 0), (4, 0), (4, 3), (0, 3)])
    e = geo.euclidean_mst([(0, 0), (4, 0), (4, 3)])
    geo.save_json(tmp_path / "h.json", poly.to_json())
    geo.save_json(tmp_path / "m.json", e.to_json())
    assert set(json.loads((tmp_path / "h.json").read_text())) == {"vertices"}
    assert set(json.loads((tmp_path / "m.json").read_text())) == {"edges", "points"}
    assert np.array_equal(geo.Polygon.from_json(geo.load_json(tmp_path / "h.json")).vertices, poly.vertices)
    assert geo.EdgeList.from_json(geo.load_json(tmp_path / "m.json")).edge_set() == e.edge_set()
