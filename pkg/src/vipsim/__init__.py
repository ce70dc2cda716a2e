"""Desk-scale interactive prototyping simulator.

A simulated camera, microphone and projector stand in for the physical
rig: color-marker tracking and quad-pose recovery from synthetic
frames, tap detection from synthetic audio, a gesture state machine on
top, and a component layout model that the gestures edit.
"""
from .audio import AudioBuffer, BandPassSpec, TapEvent, TapSensor, band_pass, detect_taps
from .edges import CannyParams, canny
from .geometry import (
    DegenerateQuadError,
    Homography,
    PointAtInfinityError,
    Quad,
    Rect,
    extract_quad,
    homography_from_quad,
    inverse_warp,
    warp_point,
)
from .gestures import (
    GestureEvent,
    GestureFsm,
    SurfaceView,
    Tick,
    TouchEvent,
    fuse,
)
from .model import (
    ActionBinding,
    Effect,
    Element,
    Palette,
    PaletteSlot,
    SessionState,
    apply_gesture,
    load_session,
    render_layout,
    save_session,
)
from .raster import BinaryMask, EdgeMap, ImageGray8, ImageHSV8, ImageRGB8, Point2
from .segmentation import (
    HsvThresholds,
    centroid,
    convex_hull,
    gaussian_blur,
    pyramid_scrub,
    rgb_to_hsv,
    segment,
)
from .session import SessionRunner, run_scenario
from .tracking import (
    DisplayObjectTrack,
    MarkerTrack,
    MoveEvent,
    update_display_object,
    update_marker,
)
from .world import Scenario, WorldState, parse_scenario, render_world, synth_audio

__version__ = "0.1.0"
