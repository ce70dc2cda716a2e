"""Frame-to-frame tracking of the color marker and the display quad.

Marker motion is gated: a new centre is only reported once it differs
from the last reported one by at least 8 pixels on some axis. The same
gate stabilizes the display quad's pose against jitter.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .geometry import Homography, Quad, homography_from_quad
from .raster import BinaryMask, Point2
from .segmentation import HsvThresholds, centroid, mask_hull

MOVE_GATE_PX = 8.0
MARKER_LOST_FRAMES = 5
DISPLAY_HOLD_FRAMES = 15


@dataclass(frozen=True)
class MoveEvent:
    marker_id: str
    t: float
    centre: Point2


@dataclass(frozen=True)
class MarkerTrack:
    """State for one tracked marker.

    reported_centre is the last centre that passed the movement gate;
    live_centre is the raw centroid of the current frame's mask.
    """

    marker_id: str
    thresholds: HsvThresholds
    reported_centre: Point2 | None = None
    live_centre: Point2 | None = None
    hull: tuple[Point2, ...] = ()
    lost_frames: int = 0


def _gate_fires(old: Point2, new: Point2) -> bool:
    return abs(new.x - old.x) >= MOVE_GATE_PX or abs(new.y - old.y) >= MOVE_GATE_PX


def update_marker(
    track: MarkerTrack, mask: BinaryMask, t: float
) -> tuple[MarkerTrack, MoveEvent | None]:
    """Advance the track one frame with this marker's segmented mask.

    Returns the new track and a MoveEvent when the gate fires. The first
    detection after a fresh start (or after the marker has been lost for
    MARKER_LOST_FRAMES frames) always emits.
    """
    c = centroid(mask)
    if c is None:
        lost = track.lost_frames + 1
        reported = track.reported_centre
        if lost >= MARKER_LOST_FRAMES:
            reported = None
        return (
            replace(track, live_centre=None, hull=(), lost_frames=lost, reported_centre=reported),
            None,
        )
    hull = tuple(mask_hull(mask))
    new = replace(track, live_centre=c, hull=hull, lost_frames=0)
    if track.reported_centre is None or _gate_fires(track.reported_centre, c):
        new = replace(new, reported_centre=c)
        return new, MoveEvent(track.marker_id, t, c)
    return new, None


@dataclass(frozen=True)
class DisplayObjectTrack:
    """Pose of the display surface, held across short detection gaps."""

    quad: Quad | None = None
    homography: Homography | None = None
    stale_frames: int = 0


def _pose_changed(old: Quad, new: Quad) -> bool:
    return any(_gate_fires(a, b) for a, b in zip(old.corners, new.corners))


def update_display_object(
    track: DisplayObjectTrack, detection: Quad | None
) -> DisplayObjectTrack:
    """Advance the display-object track one frame.

    A detection replaces the held pose only when some corner moved past
    the gate (jitter within the gate keeps the old, stable pose). With
    no detection the last pose is held for DISPLAY_HOLD_FRAMES frames,
    then cleared.
    """
    if detection is None:
        if track.quad is None:
            return track
        stale = track.stale_frames + 1
        if stale >= DISPLAY_HOLD_FRAMES:
            return DisplayObjectTrack()
        return replace(track, stale_frames=stale)
    if track.quad is None or _pose_changed(track.quad, detection):
        return DisplayObjectTrack(
            quad=detection, homography=homography_from_quad(detection), stale_frames=0
        )
    return replace(track, stale_frames=0)
