"""Raster value types and PPM/PGM serialization.

All pixel math in the package runs on these types. Images wrap uint8
numpy arrays; color images are (h, w, 3), single-channel images (h, w).
Coordinates are image-frame: origin top-left, x right, y down.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Point2(NamedTuple):
    """Sub-pixel position in image coordinates."""

    x: float
    y: float


def _check_dims(pixels: np.ndarray, channels: int | None) -> None:
    want = 2 if channels is None else 3
    if pixels.ndim != want:
        raise ValueError(f"expected {want}-d pixel array, got shape {pixels.shape}")
    if channels is not None and pixels.shape[2] != channels:
        raise ValueError(f"expected {channels} channels, got {pixels.shape[2]}")
    if pixels.shape[0] < 1 or pixels.shape[1] < 1:
        raise ValueError("image dimensions must be >= 1")
    if pixels.dtype != np.uint8:
        raise ValueError(f"pixels must be uint8, got {pixels.dtype}")


@dataclass(frozen=True)
class ImageRGB8:
    """8-bit RGB image, shape (h, w, 3)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        _check_dims(self.pixels, 3)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class ImageHSV8:
    """8-bit HSV image; hue is full-range (360 degrees -> 256 steps)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        _check_dims(self.pixels, 3)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class ImageGray8:
    """8-bit single-channel image, shape (h, w)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        _check_dims(self.pixels, None)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """Black/white mask; only pixel values 0 and 255 are legal."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        _check_dims(self.pixels, None)
        bad = (self.pixels != 0) & (self.pixels != 255)
        if bad.any():
            raise ValueError("mask contains values other than 0 and 255")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def white_count(self) -> int:
        return int(np.count_nonzero(self.pixels))


# Edge maps share the {0,255} contract with masks.
EdgeMap = BinaryMask


def luminance(img: ImageRGB8) -> ImageGray8:
    """Rec.601 luma, rounded to nearest."""
    p = img.pixels.astype(np.float32)
    y = 0.299 * p[:, :, 0] + 0.587 * p[:, :, 1] + 0.114 * p[:, :, 2]
    return ImageGray8(np.clip(np.rint(y), 0, 255).astype(np.uint8))


def _read_netpbm(data: bytes, magic: bytes) -> tuple[int, int, bytes]:
    if not data.startswith(magic):
        raise ValueError(f"not a {magic.decode()} file")
    # header = magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed between them
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated netpbm header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    return width, height, data[pos:]


def read_ppm(data: bytes) -> ImageRGB8:
    """Parse a binary P6 PPM."""
    width, height, raw = _read_netpbm(data, b"P6")
    need = width * height * 3
    if len(raw) < need:
        raise ValueError("truncated PPM pixel data")
    arr = np.frombuffer(raw[:need], dtype=np.uint8).reshape(height, width, 3)
    return ImageRGB8(arr.copy())


def write_ppm(img: ImageRGB8) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode()
    return header + img.pixels.tobytes()


def read_pgm(data: bytes) -> ImageGray8:
    """Parse a binary P5 PGM."""
    width, height, raw = _read_netpbm(data, b"P5")
    need = width * height
    if len(raw) < need:
        raise ValueError("truncated PGM pixel data")
    arr = np.frombuffer(raw[:need], dtype=np.uint8).reshape(height, width)
    return ImageGray8(arr.copy())


def write_pgm(img: ImageGray8 | BinaryMask) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    return header + img.pixels.tobytes()


def read_mask(data: bytes) -> BinaryMask:
    """Parse a P5 PGM that must contain only 0x00/0xFF bytes."""
    return BinaryMask(read_pgm(data).pixels)


def fill_convex(px: np.ndarray, corners, color) -> None:
    """Paint a convex polygon (corners in positive shoelace order) onto
    an image array in place. Pixels on the boundary are included."""
    h, w = px.shape[:2]
    xs = [c[0] for c in corners]
    ys = [c[1] for c in corners]
    x0 = max(int(np.floor(min(xs))), 0)
    x1 = min(int(np.ceil(max(xs))) + 1, w)
    y0 = max(int(np.floor(min(ys))), 0)
    y1 = min(int(np.ceil(max(ys))) + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    yy, xx = np.mgrid[y0:y1, x0:x1]
    inside = np.ones(yy.shape, dtype=bool)
    n = len(corners)
    for i in range(n):
        ax, ay = corners[i][0], corners[i][1]
        bx, by = corners[(i + 1) % n][0], corners[(i + 1) % n][1]
        inside &= (bx - ax) * (yy - ay) - (by - ay) * (xx - ax) >= 0
    px[y0:y1, x0:x1][inside] = color
