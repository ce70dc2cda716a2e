"""End-to-end session loop: world frames and audio in, JSONL events and
a final session document out.

Per frame, in order: vision (marker mask -> track, edges -> quad pose),
then any taps that fell due since the last frame (fused into touches),
then the frame's move event, then a clock tick for gesture timeouts.
Every event is appended to the log; gestures are folded into the model
state as they are emitted. The whole loop is deterministic for a fixed
scenario and seed.
"""
from __future__ import annotations

import json
import os
from collections import deque
from dataclasses import dataclass

from scipy import ndimage

from . import model
from .audio import TapEvent, band_pass, detect_taps
from .edges import CannyParams, canny
from .geometry import extract_quad
from .gestures import GestureEvent, GestureFsm, Tick, fuse
from .model import SessionState, apply_gesture, render_layout
from .raster import EdgeMap, ImageRGB8, Point2, luminance, write_ppm
from .segmentation import pyramid_scrub, rgb_to_hsv, segment
from .tracking import (
    DisplayObjectTrack,
    MarkerTrack,
    MoveEvent,
    update_display_object,
    update_marker,
)
from .world import Scenario, render_world, synth_audio

MARKER_ID = "m1"
SAMPLE_KEEP_MS = 500.0
MARKER_SUPPRESS_SIZE = 11


@dataclass(frozen=True)
class VisionParams:
    """Fixed pipeline knobs: Canny pre-blur and hysteresis thresholds
    (gradient-magnitude units), and the window used to knock marker
    edges out of the edge map before quad fitting."""

    canny_sigma: float = 1.4
    canny_low: float = 60.0
    canny_high: float = 120.0
    suppress_size: int = MARKER_SUPPRESS_SIZE


def _round_floats(v, nd: int = 4):
    if isinstance(v, float):
        return round(v, nd)
    if isinstance(v, dict):
        return {k: _round_floats(x, nd) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round_floats(x, nd) for x in v]
    return v


def _event_line(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


class SessionRunner:
    """Drives one scenario (or a live, server-steered world) through
    the full perception + gesture + model pipeline."""

    def __init__(self, scenario: Scenario, vision: VisionParams | None = None):
        self.scenario = scenario
        self.vision = vision or VisionParams()
        self.state = SessionState(palette=scenario.palette)
        self.fsm = GestureFsm()
        self.marker = MarkerTrack(MARKER_ID, scenario.world.marker_thresholds)
        self.dobj = DisplayObjectTrack()
        self.samples: deque[tuple[float, Point2]] = deque()
        self.events: list[dict] = []
        self._canny_params = CannyParams(
            self.vision.canny_low, self.vision.canny_high, self.vision.canny_sigma
        )

    # -- logging ------------------------------------------------------

    def _log(self, doc: dict) -> None:
        self.events.append(doc)

    def _log_move(self, mv: MoveEvent) -> None:
        self._log(
            {
                "type": "move",
                "marker": mv.marker_id,
                "t": round(mv.t, 3),
                "x": round(mv.centre.x, 3),
                "y": round(mv.centre.y, 3),
            }
        )

    def _log_tap(self, tap: TapEvent) -> None:
        self._log({"type": "tap", "t": round(tap.t, 3), "peak": round(tap.peak, 4)})

    def _log_gesture(self, g: GestureEvent) -> None:
        self._log(
            {
                "type": "gesture",
                "kind": g.kind,
                "t": round(g.t, 3),
                "target": g.target,
                "payload": _round_floats(g.payload),
            }
        )

    # -- pipeline -----------------------------------------------------

    def _refresh_surface(self) -> None:
        self.fsm.set_surface(model.surface_view(self.state, self.dobj))

    def _apply(self, gestures: list[GestureEvent]) -> None:
        for g in gestures:
            self.state, effects = apply_gesture(self.state, g)
            self._log_gesture(g)
            for fx in effects:
                self._log(
                    {
                        "type": "effect",
                        "t": round(fx.t, 3),
                        "element": fx.element_id,
                        "action": fx.action,
                    }
                )
        if gestures:
            self._refresh_surface()

    def process_frame(self, frame: ImageRGB8, t: float) -> MoveEvent | None:
        """Vision for one frame; returns the marker move event, if the
        gate fired, without stepping the FSM."""
        hsv = rgb_to_hsv(frame)
        mask = pyramid_scrub(segment(hsv, self.marker.thresholds))
        self.marker, move = update_marker(self.marker, mask, t)

        edges = canny(luminance(frame), self._canny_params)
        if mask.white_count() > 0:
            # marker edges outside the quad would stretch its hull
            grown = ndimage.maximum_filter(mask.pixels, size=self.vision.suppress_size)
            px = edges.pixels.copy()
            px[grown > 0] = 0
            edges = EdgeMap(px)
        self.dobj = update_display_object(self.dobj, extract_quad(edges))

        if self.marker.live_centre is not None:
            self.samples.append((t, self.marker.live_centre))
        while self.samples and self.samples[0][0] < t - SAMPLE_KEEP_MS:
            self.samples.popleft()
        self._refresh_surface()
        return move

    def step_events(self, t: float, taps: list[TapEvent], move: MoveEvent | None) -> None:
        """Feed due taps, then the move, then a tick, into the FSM."""
        for tap in taps:
            self._log_tap(tap)
            touch = fuse(tap, tuple(self.samples), self.dobj)
            if touch is not None:
                self._apply(self.fsm.step(touch))
        if move is not None:
            self._log_move(move)
            self._apply(self.fsm.step(move))
        self._apply(self.fsm.step(Tick(t)))

    # -- batch run ----------------------------------------------------

    def run(self, dump_frames: str | None = None) -> str:
        """Run the scripted scenario start to finish; returns the JSONL
        event log. Optionally dumps world and overlay frames as PPMs."""
        w = self.scenario.world
        audio = self.scenario.audio
        taps = detect_taps(
            band_pass(synth_audio(w), audio.band),
            threshold=audio.threshold,
            refractory_ms=audio.refractory_ms,
        )
        pending = deque(taps)

        dt = 1000.0 / w.frame_rate
        n_frames = int(w.duration_ms / dt) + 1
        for i in range(n_frames):
            t = i * dt
            if t > w.duration_ms:
                break
            frame = render_world(w, t)
            move = self.process_frame(frame, t)
            due: list[TapEvent] = []
            while pending and pending[0].t <= t:
                due.append(pending.popleft())
            self.step_events(t, due, move)
            if dump_frames is not None:
                self._dump(dump_frames, i, frame)
        return "".join(_event_line(e) + "\n" for e in self.events)

    def _dump(self, out_dir: str, index: int, frame: ImageRGB8) -> None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"world_{index:04d}.ppm"), "wb") as f:
            f.write(write_ppm(frame))
        overlay = render_layout(self.state, self.dobj, frame.width, frame.height)
        with open(os.path.join(out_dir, f"overlay_{index:04d}.ppm"), "wb") as f:
            f.write(write_ppm(overlay))


def run_scenario(
    scenario: Scenario, dump_frames: str | None = None
) -> tuple[str, SessionState]:
    """Convenience wrapper: event log JSONL plus the final state."""
    runner = SessionRunner(scenario)
    log = runner.run(dump_frames=dump_frames)
    return log, runner.state
