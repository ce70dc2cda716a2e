"""Color segmentation pipeline: HSV conversion, smoothing, threshold
segmentation, pyramid noise scrub, centroid and convex hull extraction.

The segmentation rule uses strict inequalities on all six thresholds:
a pixel is white only when hue, saturation and value are each strictly
inside their window. The hue window may wrap (lo > hi means the interval
crosses 0).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .raster import BinaryMask, ImageGray8, ImageHSV8, ImageRGB8, Point2


@dataclass(frozen=True)
class HsvThresholds:
    """Six-sided HSV window, all bounds in 0..255."""

    hue_lo: int
    hue_hi: int
    sat_lo: int
    sat_hi: int
    val_lo: int
    val_hi: int

    def __post_init__(self) -> None:
        for name in ("hue_lo", "hue_hi", "sat_lo", "sat_hi", "val_lo", "val_hi"):
            v = getattr(self, name)
            if not (0 <= v <= 255):
                raise ValueError(f"{name}={v} outside 0..255")
        if not self.sat_lo < self.sat_hi:
            raise ValueError("sat_lo must be < sat_hi")
        if not self.val_lo < self.val_hi:
            raise ValueError("val_lo must be < val_hi")
        # hue pair may wrap: lo > hi means the window crosses 0

    def contains(self, h: int, s: int, v: int) -> bool:
        """Scalar form of the segmentation rule (strict inequalities)."""
        if self.hue_lo < self.hue_hi:
            hue_ok = self.hue_lo < h < self.hue_hi
        else:
            hue_ok = h > self.hue_lo or h < self.hue_hi
        return bool(
            hue_ok
            and self.sat_lo < s < self.sat_hi
            and self.val_lo < v < self.val_hi
        )


def rgb_to_hsv(img: ImageRGB8) -> ImageHSV8:
    """Per-pixel RGB -> HSV with hue scaled 360 degrees -> 256 steps.

    Hue and saturation are truncated (floor) from the exact rational
    values; achromatic pixels get h=0, s=0.
    """
    p = img.pixels.astype(np.int32)
    r, g, b = p[:, :, 0], p[:, :, 1], p[:, :, 2]
    maxc = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    delta = maxc - minc

    # achromatic pixels (delta 0) have h=0 and s=0 whatever maxc is, so
    # hue and saturation only need computing on the chromatic subset
    out = np.zeros(p.shape, dtype=np.uint8)
    out[:, :, 2] = maxc
    ci = np.nonzero(delta > 0)
    if ci[0].size:
        rc, gc, bc = r[ci], g[ci], b[ci]
        mx, dl = maxc[ci], delta[ci]
        d6 = 6 * dl
        s = (255 * dl) // mx

        # hue in 256 steps: 60 deg * f / delta maps to 256 * f / (6 * delta)
        h = np.empty_like(dl)
        is_r = mx == rc
        is_g = ~is_r & (mx == gc)
        is_b = ~is_r & ~is_g
        np.floor_divide((gc - bc) * 256, d6, out=h, where=is_r)
        np.floor_divide(((bc - rc) + 2 * dl) * 256, d6, out=h, where=is_g)
        np.floor_divide(((rc - gc) + 4 * dl) * 256, d6, out=h, where=is_b)
        h &= 255  # wrap negative red-side hues into 0..255

        out[:, :, 0][ci] = h
        out[:, :, 1][ci] = s
    return ImageHSV8(out)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized discrete Gaussian, radius ceil(3*sigma)."""
    if sigma <= 0:
        return np.array([1.0])
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur_plane(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(plane, kernel, axis=0, mode="nearest")
    return ndimage.correlate1d(out, kernel, axis=1, mode="nearest")


def gaussian_blur(img, sigma: float):
    """Separable Gaussian smoothing; border handling clamps to the edge.

    sigma=0 returns the input unchanged. Accepts ImageGray8 or ImageRGB8
    and returns the same type; quantization to uint8 happens once, after
    both passes.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return img
    kernel = gaussian_kernel1d(sigma)
    p = img.pixels.astype(np.float64)
    if isinstance(img, ImageRGB8):
        out = np.stack([_blur_plane(p[:, :, c], kernel) for c in range(3)], axis=2)
        return ImageRGB8(np.clip(np.rint(out), 0, 255).astype(np.uint8))
    if isinstance(img, ImageGray8):
        return ImageGray8(np.clip(np.rint(_blur_plane(p, kernel)), 0, 255).astype(np.uint8))
    raise TypeError(f"cannot blur {type(img).__name__}")


def segment(img: ImageHSV8, t: HsvThresholds) -> BinaryMask:
    """Threshold segmentation: white where all three channels are strictly
    inside their windows, black elsewhere."""
    p = img.pixels
    h, s, v = p[:, :, 0], p[:, :, 1], p[:, :, 2]
    if t.hue_lo < t.hue_hi:
        hue_ok = (h > t.hue_lo) & (h < t.hue_hi)
    else:
        hue_ok = (h > t.hue_lo) | (h < t.hue_hi)
    keep = hue_ok & (s > t.sat_lo) & (s < t.sat_hi) & (v > t.val_lo) & (v < t.val_hi)
    return BinaryMask(np.where(keep, 255, 0).astype(np.uint8))


def pyramid_scrub(mask: BinaryMask) -> BinaryMask:
    """Speckle removal: one 2x majority downsample (a block stays white
    only when >= 3 of its 2x2 pixels are white) followed by 2x nearest
    upsample back to the original size."""
    p = mask.pixels
    h, w = p.shape
    ph, pw = (h + 1) // 2 * 2, (w + 1) // 2 * 2
    padded = np.zeros((ph, pw), dtype=np.uint8)
    padded[:h, :w] = p
    blocks = padded.reshape(ph // 2, 2, pw // 2, 2)
    counts = (blocks != 0).sum(axis=(1, 3))
    small = counts >= 3
    up = np.repeat(np.repeat(small, 2, axis=0), 2, axis=1)[:h, :w]
    return BinaryMask(np.where(up, 255, 0).astype(np.uint8))


def centroid(mask: BinaryMask) -> Point2 | None:
    """Mean position of white pixels; None when the mask is empty."""
    ys, xs = np.nonzero(mask.pixels)
    if len(xs) == 0:
        return None
    return Point2(float(xs.mean()), float(ys.mean()))


def _cross(o: Point2, a: Point2, b: Point2) -> float:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def convex_hull(points: Sequence[Point2]) -> list[Point2]:
    """Minimal convex polygon around the points (monotone chain).

    Collinear boundary points are excluded. Output is in positive-cross
    (counter-clockwise in x-right/y-up algebra) order, rotated to start
    at the lowest-y, then lowest-x vertex. Fewer than 3 distinct points
    come back as the distinct points sorted by (y, x).
    """
    distinct = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(distinct) < 3:
        return [Point2(x, y) for x, y in sorted(distinct, key=lambda q: (q[1], q[0]))]
    pts = [Point2(x, y) for x, y in distinct]

    lower: list[Point2] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point2] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # all points collinear
        return [min(pts), max(pts)]
    start = min(range(len(hull)), key=lambda i: (hull[i].y, hull[i].x))
    return hull[start:] + hull[:start]


def mask_boundary_points(mask: BinaryMask) -> list[Point2]:
    """Per-row extreme white pixels; a cheap superset of the hull vertices."""
    rr, cc = np.nonzero(mask.pixels)
    if rr.size == 0:
        return []
    # nonzero is row-major, so each row's columns arrive sorted: the first
    # occurrence per row is its min x and the one before the next row's
    # first occurrence is its max x
    rows, idx0 = np.unique(rr, return_index=True)
    idx1 = np.append(idx0[1:], rr.size) - 1
    out: list[Point2] = []
    for y, lo, hi in zip(rows, cc[idx0], cc[idx1]):
        out.append(Point2(float(lo), float(y)))
        if hi != lo:
            out.append(Point2(float(hi), float(y)))
    return out


def mask_hull(mask: BinaryMask) -> list[Point2]:
    """Convex hull of the white pixels."""
    return convex_hull(mask_boundary_points(mask))
