import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import convex_polygons, point
from icpbalance.geom import (
    ConvexPolygon,
    boundary_samples,
    convex_hull,
    distance_vector,
    intersect,
    minkowski_sum,
    polygon_distance,
    polygon_from_halfplanes,
    project_point,
    scale_about,
    sweep_expand,
    visible_vertices,
)

SQUARE = ConvexPolygon.rectangle((0, 0), 1.0, 1.0)


# -- construction -----------------------------------------------------------


def test_hull_is_ccw_and_drops_collinear_points():
    poly = ConvexPolygon([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
    assert len(poly) == 4
    assert poly.area == pytest.approx(1.0)


def test_degenerate_polygons_are_legal():
    pt = ConvexPolygon([(1, 2), (1, 2 + 1e-12)])
    assert len(pt) == 1
    seg = ConvexPolygon([(0, 0), (1, 1), (0.5, 0.5)])
    assert len(seg) == 2 and seg.area == 0.0
    assert seg.contains((0.25, 0.25))
    assert not seg.contains((0.25, 0.3))


def test_non_finite_and_empty_input_rejected():
    with pytest.raises(ValueError):
        ConvexPolygon([(0, 0), (math.nan, 1)])
    with pytest.raises(ValueError):
        convex_hull(np.empty((0, 2)))


@given(st.lists(point, min_size=1, max_size=12))
def test_hull_invariants(pts):
    v = ConvexPolygon(pts).vertices
    n = len(v)
    if n >= 3:
        e1 = v - np.roll(v, 1, axis=0)
        e2 = np.roll(v, -1, axis=0) - v
        cr = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        assert np.all(cr > 0)
    # every input point is covered
    assert oracles.dist_to_hull(v, np.array(pts)).max() <= 1e-7


# -- projection and distance ------------------------------------------------


@pytest.mark.parametrize(
    "p, expected",
    [((0, 0), (0, 0)), ((2, 0), (0.5, 0)), ((1.5, 1.5), (0.5, 0.5)), ((0, -3), (0, -0.5))],
)
def test_project_point_square(p, expected):
    assert np.allclose(project_point(SQUARE, p), expected)


def test_project_point_triangle_dense_sample():
    # [DERIVED] dense boundary sampling (3e5 samples) puts the minimizer at (0.5, 0.5)
    tri = ConvexPolygon([(0, 0), (1, 0), (0, 1)])
    assert np.allclose(project_point(tri, (1, 1)), (0.5, 0.5), atol=1e-12)


@pytest.mark.parametrize(
    "p, expected", [((0.1, 0.1), (0.0, 0.0)), ((2, 0), (1.5, 0)), ((1.5, 1.5), (1.0, 1.0))]
)
def test_distance_vector_square(p, expected):
    assert np.allclose(distance_vector(SQUARE, p), expected)


def test_projection_onto_point_and_segment():
    assert np.allclose(project_point(ConvexPolygon([(1, 1)]), (5, 5)), (1, 1))
    seg = ConvexPolygon([(0, 0), (2, 0)])
    assert np.allclose(project_point(seg, (1, 3)), (1, 0))
    assert np.allclose(project_point(seg, (-1, -1)), (0, 0))


@given(convex_polygons(), point)
def test_projection_minimizes_distance(poly, p):
    q = project_point(poly, p)
    s = boundary_samples(poly, 100)
    d = math.hypot(*(np.asarray(p) - q))
    assert d <= np.hypot(*(np.asarray(p) - s).T).min() + 1e-9
    assert np.allclose(distance_vector(poly, q), 0.0, atol=1e-12)


@given(convex_polygons(), point)
def test_distance_matches_oracle(poly, p):
    got = poly.distance_points(np.array([p]))[0]
    assert got == pytest.approx(oracles.dist_to_hull(poly.vertices, np.array([p]))[0], abs=1e-9)


# -- intersection -----------------------------------------------------------


def test_intersect_overlapping_squares():
    out = intersect(SQUARE, SQUARE.translate((0.5, 0)))
    assert out.area == pytest.approx(0.5)
    assert np.allclose(out.vertices.min(axis=0), (0, -0.5))
    assert np.allclose(out.vertices.max(axis=0), (0.5, 0.5))


def test_intersect_disjoint_is_none():
    assert intersect(SQUARE, SQUARE.translate((2, 0))) is None


def test_intersect_touching_edge_is_segment():
    out = intersect(SQUARE, SQUARE.translate((1, 0)))
    assert out is not None and out.is_degenerate


# [DERIVED] Monte-Carlo membership, 4e6 uniform samples over the joint bounding box
MC_PAIRS = [
    (
        [[0.03, 0.67], [-0.246, -0.31], [-0.227, -0.496], [0.053, -0.465], [0.245, 0.178]],
        [[-0.651, -0.345], [0.378, 0.207], [0.285, 0.648], [-0.334, 0.436], [-0.621, 0.182]],
        0.1398,
    ),
    (
        [[-0.016, 0.442], [-1.258, -0.269], [-0.489, -0.404], [0.53, -0.404]],
        [[-0.021, 1.3], [-0.313, 0.338], [0.681, -0.3], [0.979, -0.474], [0.73, 0.36]],
        0.0837,
    ),
    (
        [[-0.094, 0.341], [-0.29, -0.098], [0.064, -0.594], [0.719, -0.338], [0.037, 0.288], [-0.033, 0.334]],
        [[-0.362, -0.097], [0.623, -0.696], [0.929, 0.645], [0.749, 0.873]],
        0.3801,
    ),
]


@pytest.mark.parametrize("a, b, area", MC_PAIRS)
def test_intersect_area_matches_monte_carlo(a, b, area):
    out = intersect(ConvexPolygon(a), ConvexPolygon(b))
    assert out.area == pytest.approx(area, rel=0.01)


@given(convex_polygons(), convex_polygons())
def test_intersection_inside_both_and_commutative(a, b):
    ab, ba = intersect(a, b), intersect(b, a)
    assert (ab is None) == (ba is None)
    if ab is None:
        return
    assert a.contains_points(ab.vertices, 1e-7).all()
    assert b.contains_points(ab.vertices, 1e-7).all()
    assert ab.area == pytest.approx(ba.area, abs=1e-7)


@given(convex_polygons(), convex_polygons())
def test_polygon_distance_zero_iff_intersecting(a, b):
    d = polygon_distance(a, b)
    assert (d == 0.0) == (intersect(a, b) is not None)
    assert d >= 0.0


# -- scaling and sweeps -----------------------------------------------------


def test_scale_about():
    assert scale_about(SQUARE, (0, 0), 1.0) == SQUARE
    half = scale_about(SQUARE, (0, 0), 0.5)
    assert np.allclose(half.vertices.min(axis=0), (-0.25, -0.25))
    with pytest.raises(ValueError):
        scale_about(SQUARE, (0, 0), 0.0)


@given(convex_polygons(), point, st.floats(0.05, 5.0))
def test_scale_area_and_map(poly, c, f):
    s = scale_about(poly, c, f)
    assert s.area == pytest.approx(f * f * poly.area, rel=1e-9, abs=1e-12)
    assert np.allclose(np.sort(s.vertices, axis=0), np.sort(np.asarray(c) + f * (poly.vertices - c), axis=0))


def test_sweep_identity_stamp():
    assert np.allclose(sweep_expand(SQUARE, ConvexPolygon([(0, 0)])).vertices, SQUARE.vertices)


def test_sweep_of_point_gives_reflected_stamp():
    disc = ConvexPolygon.regular((0, 0), 0.3, 16)
    out = sweep_expand(ConvexPolygon([(0, 0)]), disc)
    assert np.allclose(np.sort(out.vertices, axis=0), np.sort(-disc.vertices, axis=0))


def test_sweep_square_grid_oracle():
    # [DERIVED] grid oracle over placements r: (stamp + r) meets the unit square
    # exactly on a square of side 1.2, area 1.44
    out = sweep_expand(SQUARE, ConvexPolygon.rectangle((0, 0), 0.2, 0.2))
    assert out.area == pytest.approx(1.44)


@given(convex_polygons(max_points=6), convex_polygons(max_points=6))
def test_sweep_matches_placement_oracle(base, stamp):
    out = sweep_expand(base, stamp)
    rng = np.random.default_rng(0)
    lo = out.vertices.min(axis=0) - 0.2
    hi = out.vertices.max(axis=0) + 0.2
    for r in lo + (hi - lo) * rng.random((25, 2)):
        moved = stamp.translate(r)
        hit = polygon_distance(moved, base) <= 1e-9
        d = out.distance_points(r[None])[0]
        if d > 1e-7:
            assert not hit
        elif out.contains_points(r[None], -1e-6)[0]:
            assert hit


@given(convex_polygons(), convex_polygons(max_points=6))
def test_sweep_contains_translated_base(base, stamp):
    out = sweep_expand(base, stamp)
    for q in stamp.vertices:
        assert out.contains_points(base.vertices - q, 1e-7).all()


@given(convex_polygons(), convex_polygons())
def test_minkowski_support_function(a, b):
    s = minkowski_sum(a, b)
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    lhs = oracles.support_function(s.vertices, th)
    rhs = oracles.support_function(a.vertices, th) + oracles.support_function(b.vertices, th)
    assert np.allclose(lhs, rhs, atol=1e-9)


# -- visibility -------------------------------------------------------------


def test_visible_single_face():
    v = visible_vertices(SQUARE, (2, 0))
    assert np.allclose(v, [(0.5, -0.5), (0.5, 0.5)])


def test_visible_corner_view():
    # [DERIVED] ray casting per vertex: the segment to (2,2) leaves the square
    # immediately for exactly these three vertices
    v = visible_vertices(SQUARE, (2, 2))
    assert np.allclose(v, [(0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])


def test_visible_collinear_edge_included_once():
    v = visible_vertices(SQUARE, (2, 0.5))
    assert len(v) == len(np.unique(v, axis=0))
    assert any(np.allclose(x, (-0.5, 0.5)) for x in v)
    assert any(np.allclose(x, (0.5, 0.5)) for x in v)


def test_visible_from_inside_rejected():
    with pytest.raises(ValueError):
        visible_vertices(SQUARE, (0, 0))


@given(convex_polygons(), point)
def test_visible_vertices_ray_cast(poly, p):
    p = np.asarray(p, dtype=float)
    if poly.distance_points(p[None])[0] < 1e-3:
        return
    vis = visible_vertices(poly, p)
    A, b = poly.halfspaces()
    for v in poly.vertices:
        # a vertex is visible when the segment towards p leaves the polygon at once
        probe = v + 1e-6 * (p - v) / np.linalg.norm(p - v)
        strictly_out = np.max(A @ probe - b) > 1e-12
        listed = any(np.allclose(v, w) for w in vis)
        if strictly_out:
            assert listed


# -- half-plane clipping and determinism ------------------------------------


def test_halfplane_clip():
    out = polygon_from_halfplanes(SQUARE, [(1.0, 0.0)], [0.0])
    assert out.area == pytest.approx(0.5)
    assert polygon_from_halfplanes(SQUARE, [(1.0, 0.0)], [-1.0]) is None


@given(convex_polygons(), convex_polygons())
def test_operations_deterministic(a, b):
    assert intersect(a, b) == intersect(a, b)
    assert sweep_expand(a, b) == sweep_expand(a, b)
