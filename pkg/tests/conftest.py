import numpy as np
import pytest

from vipsim import BinaryMask, ImageGray8, ImageRGB8


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def gray(arr) -> ImageGray8:
    return ImageGray8(np.asarray(arr, dtype=np.uint8))


def rgb(arr) -> ImageRGB8:
    return ImageRGB8(np.asarray(arr, dtype=np.uint8))


def mask_of(arr) -> BinaryMask:
    a = np.asarray(arr)
    return BinaryMask(np.where(a > 0, 255, 0).astype(np.uint8))


# one line per acceptance criterion, echoed after the test summary so the
# verdicts survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
