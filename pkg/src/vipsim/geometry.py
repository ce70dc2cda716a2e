"""Quadrilateral fitting and plane homographies.

A display surface shows up in the camera as a bright convex quad. We fit
its four corners from an edge map, then build the 3x3 homography that
maps the unit square (model space) onto those corners, so gestures
measured in pixels can be expressed in surface coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import EdgeMap, Point2

MIN_QUAD_AREA = 64.0

# unit-square corners in TL, TR, BR, BL order
UNIT_SQUARE = (
    Point2(0.0, 0.0),
    Point2(1.0, 0.0),
    Point2(1.0, 1.0),
    Point2(0.0, 1.0),
)


class DegenerateQuadError(ValueError):
    """Raised when four corners do not span a proper quadrilateral."""


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle; for layout work, in unit-square coords."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w < 0 or self.h < 0:
            raise ValueError("rect needs nonnegative size")

    @property
    def center(self) -> Point2:
        return Point2(self.x + self.w / 2.0, self.y + self.h / 2.0)

    def contains(self, p: Point2) -> bool:
        return self.x <= p.x <= self.x + self.w and self.y <= p.y <= self.y + self.h


class PointAtInfinityError(ValueError):
    """Raised when a projective mapping sends a point to w ~ 0."""


def _shoelace(corners: tuple[Point2, Point2, Point2, Point2]) -> float:
    s = 0.0
    for i in range(4):
        a = corners[i]
        b = corners[(i + 1) % 4]
        s += a.x * b.y - b.x * a.y
    return s


@dataclass(frozen=True)
class Quad:
    """Convex quadrilateral, corners ordered TL, TR, BR, BL.

    In image coordinates (y grows downward) that order walks the
    boundary with positive shoelace sum.
    """

    corners: tuple[Point2, Point2, Point2, Point2]

    def __post_init__(self) -> None:
        if len(self.corners) != 4:
            raise DegenerateQuadError("quad needs exactly 4 corners")
        object.__setattr__(
            self, "corners", tuple(Point2(float(p[0]), float(p[1])) for p in self.corners)
        )
        if _shoelace(self.corners) <= 0:
            raise DegenerateQuadError("corners must be in TL,TR,BR,BL order")

    @property
    def area(self) -> float:
        return _shoelace(self.corners) / 2.0

    def contains(self, p: Point2) -> bool:
        """True when p lies inside or on the boundary."""
        for i in range(4):
            a = self.corners[i]
            b = self.corners[(i + 1) % 4]
            cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
            if cross < 0:
                return False
        return True


def _convex_hull_of(points: list[Point2]) -> list[Point2]:
    # local import: segmentation already depends on raster only
    from .segmentation import convex_hull

    return convex_hull(points)


def _pick_corners(hull: list[Point2]) -> tuple[Point2, Point2, Point2, Point2] | None:
    """Extreme-point corner picks with lexicographic tie-breaks.

    Each corner maximizes a diagonal score; ties fall back to the
    coordinate that pushes the pick further into that corner.
    """
    tl = min(hull, key=lambda p: (p.x + p.y, p.y, p.x))
    tr = max(hull, key=lambda p: (p.x - p.y, p.x, -p.y))
    br = max(hull, key=lambda p: (p.x + p.y, p.y, p.x))
    bl = max(hull, key=lambda p: (p.y - p.x, -p.x, p.y))
    picks = (tl, tr, br, bl)
    if len(set(picks)) != 4:
        return None
    return picks


def _fit_edge_line(pts: np.ndarray, a: Point2, b: Point2):
    """Total-least-squares line through the edge pixels supporting the
    side a->b, as (px, py, dx, dy); None when the side is too short or
    the support too thin."""
    length = math.hypot(b.x - a.x, b.y - a.y)
    if length < 6.0:
        return None
    dx = (b.x - a.x) / length
    dy = (b.y - a.y) / length
    rx = pts[:, 0] - a.x
    ry = pts[:, 1] - a.y
    along = rx * dx + ry * dy
    across = ry * dx - rx * dy
    margin = min(3.0, length / 4.0)
    sel = (np.abs(across) <= 1.5) & (along >= margin) & (along <= length - margin)
    if np.count_nonzero(sel) < 4:
        return None
    px = pts[sel, 0]
    py = pts[sel, 1]
    mx = float(px.mean())
    my = float(py.mean())
    ux = px - mx
    uy = py - my
    cxx = float(ux @ ux)
    cxy = float(ux @ uy)
    cyy = float(uy @ uy)
    # principal direction of the 2x2 scatter matrix
    tr = cxx + cyy
    det = cxx * cyy - cxy * cxy
    lam = tr / 2.0 + math.sqrt(max(tr * tr / 4.0 - det, 0.0))
    vx, vy = lam - cyy, cxy
    if abs(vx) + abs(vy) < 1e-12:
        vx, vy = cxy, lam - cxx
    if abs(vx) + abs(vy) < 1e-12:
        return None
    norm = math.hypot(vx, vy)
    return (mx, my, vx / norm, vy / norm)


def _intersect_lines(l1, l2) -> Point2 | None:
    x1, y1, dx1, dy1 = l1
    x2, y2, dx2, dy2 = l2
    cross = dx1 * dy2 - dy1 * dx2
    if abs(cross) < 1e-9:
        return None
    t = ((x2 - x1) * dy2 - (y2 - y1) * dx2) / cross
    return Point2(x1 + t * dx1, y1 + t * dy1)


def _refine_corners(
    corners: tuple[Point2, Point2, Point2, Point2], pts: np.ndarray
) -> tuple[Point2, ...]:
    """Subpixel corners: fit each side's support line and intersect the
    adjacent pairs. A corner keeps its integer pick when either side has
    no usable fit or the intersection strays more than a few pixels.
    Results snap to 1/64 px so lattice-aligned sides stay exactly on
    their integer corners."""
    lines = [_fit_edge_line(pts, corners[i], corners[(i + 1) % 4]) for i in range(4)]
    out = []
    for i in range(4):
        pick = corners[i]
        p = None
        if lines[i - 1] is not None and lines[i] is not None:
            p = _intersect_lines(lines[i - 1], lines[i])
        if p is None or math.hypot(p.x - pick.x, p.y - pick.y) > 3.0:
            out.append(pick)
        else:
            out.append(Point2(round(p.x * 64) / 64.0, round(p.y * 64) / 64.0))
    return tuple(out)


def extract_quad(edges: EdgeMap) -> Quad | None:
    """Fit the display quad from an edge map, or None if there is no
    credible quad (hull smaller than 4 vertices, repeated corner picks,
    or area under MIN_QUAD_AREA square pixels)."""
    ys, xs = np.nonzero(edges.pixels)
    if ys.size == 0:
        return None
    # per-row extremes are a superset of the hull vertices and keep the
    # hull scan linear in image height rather than edge count
    pts: list[Point2] = []
    order = np.argsort(ys, kind="stable")
    ys = ys[order]
    xs = xs[order]
    row_starts = np.searchsorted(ys, np.unique(ys), side="left")
    row_ends = np.append(row_starts[1:], ys.size)
    for s, e in zip(row_starts, row_ends):
        y = float(ys[s])
        seg = xs[s:e]
        lo = float(seg.min())
        hi = float(seg.max())
        pts.append(Point2(lo, y))
        if hi != lo:
            pts.append(Point2(hi, y))
    hull = _convex_hull_of(pts)
    if len(hull) < 4:
        return None
    picks = _pick_corners(hull)
    if picks is None:
        return None
    cx = sum(p.x for p in picks) / 4.0
    cy = sum(p.y for p in picks) / 4.0
    ordered = sorted(picks, key=lambda p: math.atan2(p.y - cy, p.x - cx))
    start = min(range(4), key=lambda i: (ordered[i].x + ordered[i].y, ordered[i].y, ordered[i].x))
    ordered = ordered[start:] + ordered[:start]
    edge_xy = np.column_stack((xs, ys)).astype(np.float64)
    refined = _refine_corners(tuple(ordered), edge_xy)
    try:
        quad = Quad(refined)
    except DegenerateQuadError:
        quad = Quad(tuple(ordered))
    if quad.area < MIN_QUAD_AREA:
        return None
    return quad


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, normalized so m[2][2] == 1."""

    m: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("homography matrix must be 3x3")
        if not np.isfinite(m).all():
            raise ValueError("homography matrix must be finite")
        if abs(m[2, 2]) < 1e-12:
            raise ValueError("cannot normalize: m[2][2] is zero")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) < 1e-12:
            raise ValueError("homography matrix is singular")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)


def homography_from_quad(quad: Quad) -> Homography:
    """Direct linear transform sending the unit square onto the quad.

    Unit-square corner (0,0) maps to the quad's TL, (1,0) to TR,
    (1,1) to BR and (0,1) to BL.
    """
    a = np.zeros((8, 8), dtype=np.float64)
    b = np.zeros(8, dtype=np.float64)
    for i, (src, dst) in enumerate(zip(UNIT_SQUARE, quad.corners)):
        sx, sy = src.x, src.y
        dx, dy = dst.x, dst.y
        a[2 * i] = [sx, sy, 1, 0, 0, 0, -sx * dx, -sy * dx]
        a[2 * i + 1] = [0, 0, 0, sx, sy, 1, -sx * dy, -sy * dy]
        b[2 * i] = dx
        b[2 * i + 1] = dy
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateQuadError("quad does not admit a homography") from exc
    m = np.append(h, 1.0).reshape(3, 3)
    try:
        return Homography(m)
    except ValueError as exc:
        raise DegenerateQuadError("quad does not admit a homography") from exc


def _apply(m: np.ndarray, p: Point2) -> Point2:
    v = m @ np.array([p.x, p.y, 1.0])
    w = v[2]
    if abs(w) <= 1e-9:
        raise PointAtInfinityError(f"point {p} maps to infinity")
    return Point2(float(v[0] / w), float(v[1] / w))


def warp_point(h: Homography, p: Point2) -> Point2:
    """Model space -> image space."""
    return _apply(h.m, p)


def inverse_warp(h: Homography, p: Point2) -> Point2:
    """Image space -> model space."""
    return _apply(np.linalg.inv(h.m), p)
