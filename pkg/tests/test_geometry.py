import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vipsim import (
    DegenerateQuadError,
    Homography,
    Point2,
    PointAtInfinityError,
    Quad,
    extract_quad,
    homography_from_quad,
    inverse_warp,
    warp_point,
)
from vipsim.geometry import MIN_QUAD_AREA, Rect

from conftest import mask_of


def test_rect_center_and_contains():
    r = Rect(0.2, 0.3, 0.4, 0.2)
    assert r.center == Point2(0.4, 0.4)
    assert r.contains(Point2(0.2, 0.3))  # boundary inclusive
    assert r.contains(Point2(0.6, 0.5))
    assert not r.contains(Point2(0.61, 0.4))
    with pytest.raises(ValueError):
        Rect(0, 0, -0.1, 0.5)


def test_quad_validation_and_area():
    q = Quad((Point2(0, 0), Point2(10, 0), Point2(10, 6), Point2(0, 6)))
    assert q.area == 60.0
    assert q.contains(Point2(5, 3))
    assert q.contains(Point2(0, 0))
    assert not q.contains(Point2(-1, 3))
    with pytest.raises(DegenerateQuadError):
        # reversed walk has negative shoelace sum
        Quad((Point2(0, 0), Point2(0, 6), Point2(10, 6), Point2(10, 0)))
    with pytest.raises(DegenerateQuadError):
        # collinear corners span no area
        Quad((Point2(0, 0), Point2(4, 0), Point2(8, 0), Point2(2, 0)))


def ring(points, size=110):
    arr = np.zeros((size, size), dtype=np.uint8)
    for x, y in points:
        arr[y, x] = 255
    return mask_of(arr)


def test_extract_quad_axis_rectangle_exact():
    pts = []
    for x in range(10, 91):
        pts += [(x, 10), (x, 50)]
    for y in range(10, 51):
        pts += [(10, y), (90, y)]
    q = extract_quad(ring(pts))
    assert q is not None
    assert q.corners == (
        Point2(10, 10),
        Point2(90, 10),
        Point2(90, 50),
        Point2(10, 50),
    )


def test_extract_quad_rotated_square():
    # diamond |x-50| + |y-50| = 30; lattice ring points are collinear
    # along each side, so the hull is exactly the four tips
    pts = [
        (50 + dx, 50 + dy)
        for dx in range(-30, 31)
        for dy in (30 - abs(dx), abs(dx) - 30)
    ]
    q = extract_quad(ring(pts))
    assert q is not None
    assert q.corners == (
        Point2(50, 20),
        Point2(80, 50),
        Point2(50, 80),
        Point2(20, 50),
    )


def test_extract_quad_degenerate_inputs():
    assert extract_quad(mask_of(np.zeros((20, 20)))) is None
    line = [(x, 7) for x in range(3, 18)]
    assert extract_quad(ring(line, size=20)) is None
    diag = [(i, i) for i in range(2, 18)]
    assert extract_quad(ring(diag, size=20)) is None
    tri = [(5, 5), (15, 5), (10, 12)]
    assert extract_quad(ring(tri, size=20)) is None  # three corner picks collide


def test_extract_quad_area_floor():
    def square_ring(side):
        pts = []
        for i in range(side + 1):
            pts += [(i, 0), (i, side), (0, i), (side, i)]
        return ring(pts, size=side + 2)

    assert MIN_QUAD_AREA == 64.0
    assert extract_quad(square_ring(8)) is not None  # area exactly 64 kept
    assert extract_quad(square_ring(7)) is None  # 49 px^2 rejected


def test_homography_identity_for_unit_square():
    q = Quad((Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)))
    h = homography_from_quad(q)
    assert np.allclose(h.m, np.eye(3), atol=1e-12)


def test_homography_affine_case():
    q = Quad((Point2(10, 20), Point2(110, 20), Point2(110, 120), Point2(10, 120)))
    h = homography_from_quad(q)
    want = np.array([[100.0, 0, 10], [0, 100, 20], [0, 0, 1]])
    assert np.allclose(h.m, want, atol=1e-9)


def test_homography_matrix_validation():
    with pytest.raises(ValueError):
        Homography(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Homography(np.eye(4))
    with pytest.raises(ValueError):
        m = np.eye(3)
        m[0, 0] = np.inf
        Homography(m)
    singular = np.array([[1.0, 2, 3], [2, 4, 6], [0, 0, 1]])
    with pytest.raises(ValueError):
        Homography(singular)
    # normalization rescales m22 to 1
    h = Homography(2.0 * np.eye(3))
    assert h.m[2, 2] == 1.0 and h.m[0, 0] == 1.0
    with pytest.raises(ValueError):
        h.m[0, 0] = 5.0  # matrix is frozen


def random_convex_quad(r) -> Quad | None:
    base = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    pts = [
        Point2(100 + 300 * (x + 0.25 * (r.random() - 0.5)), 80 + 260 * (y + 0.25 * (r.random() - 0.5)))
        for x, y in base
    ]
    for i in range(4):
        a, b, c = pts[i], pts[(i + 1) % 4], pts[(i + 2) % 4]
        if (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x) <= 0:
            return None
    return Quad(tuple(pts))


def test_homography_corner_round_trip_random_quads():
    r = np.random.default_rng(42)
    checked = 0
    while checked < 50:
        q = random_convex_quad(r)
        if q is None:
            continue
        h = homography_from_quad(q)
        model = [Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)]
        for src, dst in zip(model, q.corners):
            got = warp_point(h, src)
            assert abs(got.x - dst.x) < 1e-9 and abs(got.y - dst.y) < 1e-9
        for src, dst in zip(model, q.corners):
            back = inverse_warp(h, dst)
            assert abs(back.x - src.x) < 1e-6 and abs(back.y - src.y) < 1e-6
        checked += 1


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(0, 2**31 - 1))
@settings(max_examples=100)
def test_warp_inverse_composition(u, v, seed):
    r = np.random.default_rng(seed)
    q = random_convex_quad(r)
    if q is None:
        return
    h = homography_from_quad(q)
    p = warp_point(h, Point2(u, v))
    back = inverse_warp(h, p)
    assert abs(back.x - u) < 1e-6 and abs(back.y - v) < 1e-6
    assert q.contains(p)  # interior maps to interior for convex quads


def test_identity_warp_fixed_point():
    h = Homography(np.eye(3))
    assert warp_point(h, Point2(3, 4)) == Point2(3, 4)
    assert inverse_warp(h, Point2(3, 4)) == Point2(3, 4)


def test_point_at_infinity():
    m = np.array([[1.0, 0, 0], [0, 1, 0], [1, 0, 1]])
    h = Homography(m)
    with pytest.raises(PointAtInfinityError):
        warp_point(h, Point2(-1.0, 5.0))
    # regular points still work
    p = warp_point(h, Point2(1.0, 2.0))
    assert abs(p.x - 0.5) < 1e-12 and abs(p.y - 1.0) < 1e-12
