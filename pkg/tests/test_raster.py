import numpy as np
import pytest

from vipsim.raster import (
    BinaryMask,
    ImageGray8,
    ImageRGB8,
    Point2,
    fill_convex,
    luminance,
    read_mask,
    read_pgm,
    read_ppm,
    write_pgm,
    write_ppm,
)

from conftest import gray, mask_of


def test_point2_is_a_plain_pair():
    p = Point2(3.5, 7.25)
    assert p.x == 3.5 and p.y == 7.25
    assert tuple(p) == (3.5, 7.25)


def test_image_validation_rejects_bad_shapes():
    with pytest.raises(ValueError):
        ImageRGB8(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        ImageGray8(np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        ImageRGB8(np.zeros((0, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        ImageGray8(np.zeros((4, 4), dtype=np.float32))


def test_mask_rejects_intermediate_values():
    with pytest.raises(ValueError):
        BinaryMask(np.full((3, 3), 7, dtype=np.uint8))
    m = BinaryMask(np.full((3, 3), 255, dtype=np.uint8))
    assert m.white_count() == 9


def test_luminance_rec601_oracle(rng):
    px = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
    got = luminance(ImageRGB8(px)).pixels
    # independent per-pixel computation in float64
    for _ in range(50):
        y = int(rng.integers(0, 20))
        x = int(rng.integers(0, 30))
        r, g, b = (float(v) for v in px[y, x])
        want = round(0.299 * r + 0.587 * g + 0.114 * b)
        assert int(got[y, x]) == min(want, 255)


def test_ppm_round_trip(rng):
    px = rng.integers(0, 256, size=(13, 17, 3), dtype=np.uint8)
    img = ImageRGB8(px)
    data = write_ppm(img)
    back = read_ppm(data)
    assert back.width == 17 and back.height == 13
    assert np.array_equal(back.pixels, px)
    # writing again yields identical bytes
    assert write_ppm(back) == data


def test_pgm_round_trip(rng):
    px = rng.integers(0, 256, size=(9, 11), dtype=np.uint8)
    img = ImageGray8(px)
    assert np.array_equal(read_pgm(write_pgm(img)).pixels, px)


def test_netpbm_header_comments_and_whitespace():
    body = bytes(range(12))
    data = b"P5 # a comment\n# another\n 4\n3 # w h\n255\n" + body
    img = read_pgm(data)
    assert (img.width, img.height) == (4, 3)
    assert img.pixels.tobytes() == body


def test_netpbm_errors():
    with pytest.raises(ValueError):
        read_pgm(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(ValueError):
        read_pgm(b"P5\n2 2\n255\n" + bytes(3))  # short pixel data
    with pytest.raises(ValueError):
        read_pgm(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(ValueError):
        read_pgm(b"P5\n2")


def test_read_mask_enforces_binary_values():
    ok = b"P5\n2 1\n255\n" + bytes([0, 255])
    assert read_mask(ok).white_count() == 1
    with pytest.raises(ValueError):
        read_mask(b"P5\n2 1\n255\n" + bytes([0, 128]))


def test_fill_convex_square_inclusive_boundary():
    px = np.zeros((10, 10), dtype=np.uint8)
    fill_convex(px, [(2, 2), (7, 2), (7, 7), (2, 7)], 255)
    want = np.zeros((10, 10), dtype=np.uint8)
    want[2:8, 2:8] = 255
    assert np.array_equal(px, want)


def test_fill_convex_clips_to_image():
    px = np.zeros((5, 5, 3), dtype=np.uint8)
    fill_convex(px, [(-3, -3), (4, -3), (4, 4), (-3, 4)], (9, 8, 7))
    assert np.array_equal(px[0, 0], (9, 8, 7))
    assert np.array_equal(px[4, 4], (9, 8, 7))
    # polygon fully outside leaves the image untouched
    px2 = np.zeros((5, 5), dtype=np.uint8)
    fill_convex(px2, [(10, 10), (12, 10), (12, 12), (10, 12)], 255)
    assert px2.sum() == 0


def test_helpers_build_expected_types():
    assert gray([[1, 2], [3, 4]]).pixels.dtype == np.uint8
    assert mask_of([[0, 1], [2, 0]]).white_count() == 2
