"""Canny edge detection: Gaussian pre-blur, Sobel 3x3 gradient,
4-direction non-maximum suppression, two-threshold hysteresis with
8-connectivity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import EdgeMap, ImageGray8
from .segmentation import gaussian_kernel1d

_DIFF = np.array([-1.0, 0.0, 1.0])
_SMOOTH = np.array([1.0, 2.0, 1.0])


@dataclass(frozen=True)
class CannyParams:
    """Hysteresis thresholds are in Sobel gradient-magnitude units."""

    low_thresh: float
    high_thresh: float
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not (0 <= self.low_thresh <= self.high_thresh):
            raise ValueError("need 0 <= low_thresh <= high_thresh")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def sobel_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel x/y gradients (float), clamp border."""
    gx = ndimage.correlate1d(img, _DIFF, axis=1, mode="nearest")
    gx = ndimage.correlate1d(gx, _SMOOTH, axis=0, mode="nearest")
    gy = ndimage.correlate1d(img, _DIFF, axis=0, mode="nearest")
    gy = ndimage.correlate1d(gy, _SMOOTH, axis=1, mode="nearest")
    return gx, gy


def _nms(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Suppress pixels that are not local maxima along the (quantized)
    gradient direction; ties survive on both sides."""
    h, w = mag.shape
    pad = np.zeros((h + 2, w + 2), dtype=mag.dtype)
    pad[1:-1, 1:-1] = mag

    def shifted(dy: int, dx: int) -> np.ndarray:
        return pad[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    theta = np.mod(np.arctan2(gy, gx), np.pi)
    b = np.floor((theta + np.pi / 8) / (np.pi / 4)).astype(np.int8) % 4
    # bin 0: horizontal gradient, compare E/W; bin 1: 45-degree diag;
    # bin 2: vertical, compare N/S; bin 3: anti-diagonal
    neighbors = {
        0: (shifted(0, 1), shifted(0, -1)),
        1: (shifted(1, 1), shifted(-1, -1)),
        2: (shifted(1, 0), shifted(-1, 0)),
        3: (shifted(1, -1), shifted(-1, 1)),
    }
    keep = np.zeros_like(mag, dtype=bool)
    for k, (n1, n2) in neighbors.items():
        sel = b == k
        keep |= sel & (mag >= n1) & (mag >= n2)
    keep &= mag > 0
    return np.where(keep, mag, 0.0)


_BIN_OFFSETS = {0: ((0, 1), (0, -1)), 1: ((1, 1), (-1, -1)),
                2: ((1, 0), (-1, 0)), 3: ((1, -1), (-1, 1))}


def _survivors_above(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray,
                     thresh: float) -> np.ndarray:
    """Pixels with mag > thresh that survive the directional suppression.

    Same comparisons as _nms, restricted to the pixels that can matter;
    equals (_nms(mag, gx, gy) > thresh) for any thresh >= 0."""
    h, w = mag.shape
    rr, cc = np.nonzero(mag > thresh)
    out = np.zeros((h, w), dtype=bool)
    if rr.size == 0:
        return out
    theta = np.mod(np.arctan2(gy[rr, cc], gx[rr, cc]), np.pi)
    b = np.floor((theta + np.pi / 8) / (np.pi / 4)).astype(np.int8) % 4
    pad = np.zeros((h + 2, w + 2), dtype=mag.dtype)
    pad[1:-1, 1:-1] = mag
    flat = pad.ravel()
    base = (rr + 1) * (w + 2) + (cc + 1)
    m0 = mag[rr, cc]
    ok = np.zeros(rr.size, dtype=bool)
    for k, ((dy1, dx1), (dy2, dx2)) in _BIN_OFFSETS.items():
        sel = b == k
        at = base[sel]
        ok[sel] = (m0[sel] >= flat[at + dy1 * (w + 2) + dx1]) & (
            m0[sel] >= flat[at + dy2 * (w + 2) + dx2]
        )
    out[rr[ok], cc[ok]] = True
    return out


def canny(img: ImageGray8, p: CannyParams) -> EdgeMap:
    """Edge map with pixels kept when their suppressed gradient exceeds
    high_thresh, or lies in (low_thresh, high_thresh] and is 8-connected
    (through other such pixels) to one that does."""
    f = img.pixels.astype(np.float32)
    if p.sigma > 0:
        k = gaussian_kernel1d(p.sigma).astype(np.float32)
        f = ndimage.correlate1d(f, k, axis=0, mode="nearest")
        f = ndimage.correlate1d(f, k, axis=1, mode="nearest")
    gx, gy = sobel_gradients(f)
    mag = np.hypot(gx, gy)

    candidates = _survivors_above(mag, gx, gy, p.low_thresh)
    strong = candidates & (mag > p.high_thresh)
    if not strong.any():
        return EdgeMap(np.zeros_like(img.pixels))
    labels, n = ndimage.label(candidates, structure=np.ones((3, 3), dtype=bool))
    lut = np.zeros(n + 1, dtype=bool)
    lut[labels[strong]] = True
    lut[0] = False
    kept = lut[labels]
    return EdgeMap(np.where(kept, 255, 0).astype(np.uint8))
