"""Touch fusion and the gesture state machine.

A tap heard on the surface is fused with the marker position nearest in
time, mapped through the display-object homography into unit-square
coordinates, and fed to a small FSM together with marker move events.
The FSM emits the gesture vocabulary: Scan, Select, Place, Drag,
Resize, Wipe, Lock, Click.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

from .audio import TapEvent
from .geometry import Homography, Rect, inverse_warp
from .raster import Point2
from .tracking import DisplayObjectTrack, MoveEvent

FUSE_WINDOW_MS = 100.0
RELEASE_MS = 300.0
RELEASE_MOTION_PX = 3.0
LOCK_HOLD_MS = 800.0
SCAN_INTERVAL_MS = 100.0
WIPE_WINDOW_MS = 500.0
WIPE_MIN_SPAN = 0.5
WIPE_MAX_DRIFT = 0.25
PALETTE_STRIP_WIDTH = 0.15
RESIZE_ZONE_FRACTION = 0.15

EDIT = "edit"
RUN = "run"

IDLE = "idle"
TOUCHING = "touching"
DRAGGING = "dragging"
RESIZING = "resizing"

SCAN = "scan"
SELECT = "select"
PLACE = "place"
DRAG = "drag"
RESIZE = "resize"
WIPE = "wipe"
LOCK = "lock"
CLICK = "click"


class OutOfOrderError(ValueError):
    """Input timestamps must be nondecreasing."""


@dataclass(frozen=True)
class TouchEvent:
    """A tap fused with the marker position; model_pos is None when the
    touch landed off the tracked surface."""

    t: float
    image_pos: Point2
    model_pos: Point2 | None


@dataclass(frozen=True)
class GestureEvent:
    kind: str
    t: float
    target: str | None = None
    payload: dict | None = None


@dataclass(frozen=True)
class ElementView:
    """What the FSM needs to know about one laid-out element."""

    element_id: str
    rect: Rect
    locked: bool = False


@dataclass(frozen=True)
class SurfaceView:
    """Hit-testing snapshot the session refreshes after every change.

    homography carries the current display pose so marker motion can be
    projected into model space; None while the surface is untracked.
    """

    palette: tuple[str, ...] = ()
    elements: tuple[ElementView, ...] = ()
    homography: Homography | None = None


@dataclass(frozen=True)
class Tick:
    """Clock advance with no perceptual payload."""

    t: float


FsmInput = Union[TouchEvent, MoveEvent, Tick]


def fuse(
    tap: TapEvent,
    marker_samples: Sequence[tuple[float, Point2]],
    dobj: DisplayObjectTrack,
) -> TouchEvent | None:
    """Associate a tap with the marker sample nearest in time.

    Returns None when no sample lies within FUSE_WINDOW_MS of the tap.
    model_pos is the inverse-warped position when it falls inside the
    unit square, else None.
    """
    if not marker_samples:
        return None
    t_s, pos = min(marker_samples, key=lambda s: abs(s[0] - tap.t))
    if abs(t_s - tap.t) > FUSE_WINDOW_MS:
        return None
    model = None
    if dobj.homography is not None:
        m = inverse_warp(dobj.homography, pos)
        if 0.0 <= m.x <= 1.0 and 0.0 <= m.y <= 1.0:
            model = m
    return TouchEvent(t=tap.t, image_pos=pos, model_pos=model)


def _in_corner_zone(rect: Rect, p: Point2) -> bool:
    if rect.w <= 0 or rect.h <= 0 or not rect.contains(p):
        return False
    u = (p.x - rect.x) / rect.w
    v = (p.y - rect.y) / rect.h
    z = RESIZE_ZONE_FRACTION
    return (u <= z or u >= 1 - z) and (v <= z or v >= 1 - z)


@dataclass
class GestureFsm:
    """Mode (edit/run) plus a touch phase machine.

    Touch release is inferred: a touch is held until RELEASE_MS pass
    with no marker motion of at least RELEASE_MOTION_PX image pixels.
    Holding an element motionless for LOCK_HOLD_MS instead emits Lock,
    so element touches are exempt from the plain release timeout.
    """

    mode: str = EDIT
    phase: str = IDLE
    selection: tuple[str, str] | None = None  # ("palette"|"element", id)
    touch_anchor: tuple[float, Point2] | None = None
    surface: SurfaceView = field(default_factory=SurfaceView)

    _last_input_t: float = float("-inf")
    _last_motion_t: float = 0.0
    _last_image_pos: Point2 | None = None
    _last_model_pos: Point2 | None = None
    _active_element: str | None = None
    _resize_center: Point2 | None = None
    _resize_last_dist: float = 0.0
    _last_scan_t: float | None = None
    _recent: list[tuple[float, Point2]] = field(default_factory=list)

    def set_surface(self, view: SurfaceView) -> None:
        self.surface = view

    def step(self, event: FsmInput) -> list[GestureEvent]:
        if event.t < self._last_input_t:
            raise OutOfOrderError(f"input at t={event.t} after t={self._last_input_t}")
        self._last_input_t = event.t
        out = self._advance_time(event.t)
        if isinstance(event, TouchEvent):
            out.extend(self._on_touch(event))
        elif isinstance(event, MoveEvent):
            out.extend(self._on_move(event))
        return out

    # -- timeouts ----------------------------------------------------

    def _advance_time(self, now: float) -> list[GestureEvent]:
        if self.phase == IDLE:
            return []
        if self.phase == TOUCHING and self._active_element is not None:
            deadline = self._last_motion_t + LOCK_HOLD_MS
            if now >= deadline:
                locked = GestureEvent(LOCK, deadline, target=self._active_element)
                self._to_idle()
                return [locked]
            return []
        if now >= self._last_motion_t + RELEASE_MS:
            self._to_idle()
        return []

    def _to_idle(self) -> None:
        self.phase = IDLE
        self.touch_anchor = None
        self._active_element = None
        self._resize_center = None
        self._last_image_pos = None
        self._last_model_pos = None
        self._recent.clear()

    # -- touches -----------------------------------------------------

    def _hit_element(self, p: Point2) -> ElementView | None:
        for el in reversed(self.surface.elements):
            if el.rect.contains(p):
                return el
        return None

    def _hit_palette(self, p: Point2) -> str | None:
        n = len(self.surface.palette)
        if n == 0 or p.x >= PALETTE_STRIP_WIDTH:
            return None
        slot = min(int(p.y * n), n - 1)
        return self.surface.palette[slot]

    def _begin_touch(self, ev: TouchEvent, element_id: str | None) -> None:
        self.phase = TOUCHING
        self.touch_anchor = (ev.t, ev.model_pos)
        self._active_element = element_id
        self._last_motion_t = ev.t
        self._last_image_pos = ev.image_pos
        self._last_model_pos = ev.model_pos
        self._recent = [(ev.t, ev.model_pos)]

    def _on_touch(self, ev: TouchEvent) -> list[GestureEvent]:
        if ev.model_pos is None:
            return []
        p = ev.model_pos
        pos_payload = {"pos": [p.x, p.y]}
        if self.mode == RUN:
            hit = self._hit_element(p)
            self._begin_touch(ev, None)
            if hit is not None:
                return [GestureEvent(CLICK, ev.t, target=hit.element_id, payload=pos_payload)]
            return []

        slot = self._hit_palette(p)
        if slot is not None:
            self.selection = ("palette", slot)
            self._begin_touch(ev, None)
            return [GestureEvent(SELECT, ev.t, target=slot, payload=pos_payload)]

        if self.selection is not None and self.selection[0] == "element":
            sel_id = self.selection[1]
            sel = next((e for e in self.surface.elements if e.element_id == sel_id), None)
            if sel is not None and _in_corner_zone(sel.rect, p):
                self._begin_touch(ev, sel_id)
                self.phase = RESIZING
                self._resize_center = sel.rect.center
                self._resize_last_dist = math.dist(p, self._resize_center)
                return []

        hit = self._hit_element(p)
        if hit is not None:
            self.selection = ("element", hit.element_id)
            self._begin_touch(ev, hit.element_id)
            return [GestureEvent(SELECT, ev.t, target=hit.element_id, payload=pos_payload)]

        if self.selection is not None and self.selection[0] == "palette":
            slot_id = self.selection[1]
            self.selection = None
            self._to_idle()
            return [GestureEvent(PLACE, ev.t, target=slot_id, payload=pos_payload)]

        self._begin_touch(ev, None)
        return []

    # -- marker motion -----------------------------------------------

    def _project(self, image_pos: Point2) -> Point2 | None:
        if self.surface.homography is None:
            return None
        m = inverse_warp(self.surface.homography, image_pos)
        if 0.0 <= m.x <= 1.0 and 0.0 <= m.y <= 1.0:
            return m
        return None

    def _on_move(self, ev: MoveEvent) -> list[GestureEvent]:
        model = self._project(ev.centre)
        if self.phase == IDLE:
            return self._maybe_scan(ev.t, model)

        moved = False
        if self._last_image_pos is not None:
            moved = math.dist(ev.centre, self._last_image_pos) >= RELEASE_MOTION_PX
        self._last_image_pos = ev.centre
        if moved:
            self._last_motion_t = ev.t

        out: list[GestureEvent] = []
        if model is None:
            return out

        if self.phase == TOUCHING and self._active_element is not None and moved:
            self.phase = DRAGGING

        if self.phase == DRAGGING and self._last_model_pos is not None:
            delta = (model.x - self._last_model_pos.x, model.y - self._last_model_pos.y)
            out.append(
                GestureEvent(
                    DRAG,
                    ev.t,
                    target=self._active_element,
                    payload={"delta": [delta[0], delta[1]]},
                )
            )
        elif self.phase == RESIZING and self._resize_center is not None:
            d = math.dist(model, self._resize_center)
            if self._resize_last_dist > 1e-9:
                out.append(
                    GestureEvent(
                        RESIZE,
                        ev.t,
                        target=self._active_element,
                        payload={"scale": d / self._resize_last_dist},
                    )
                )
            self._resize_last_dist = d

        self._last_model_pos = model
        if self.phase in (TOUCHING, DRAGGING):
            self._recent.append((ev.t, model))
            self._prune_recent(ev.t)
            wipe = self._check_wipe(ev.t)
            if wipe is not None:
                out.append(wipe)
        return out

    def _maybe_scan(self, t: float, model: Point2 | None) -> list[GestureEvent]:
        if model is None:
            return []
        if self._last_scan_t is not None and t - self._last_scan_t < SCAN_INTERVAL_MS:
            return []
        self._last_scan_t = t
        hit = self._hit_element(model)
        target = hit.element_id if hit is not None else None
        return [GestureEvent(SCAN, t, target=target, payload={"pos": [model.x, model.y]})]

    # -- wipe --------------------------------------------------------

    def _prune_recent(self, now: float) -> None:
        cutoff = now - WIPE_WINDOW_MS
        while self._recent and self._recent[0][0] < cutoff:
            self._recent.pop(0)

    def _check_wipe(self, t: float) -> GestureEvent | None:
        pts = self._recent
        if len(pts) < 2:
            return None
        # longest suffix moving in one horizontal direction
        sign = 0
        start = len(pts) - 1
        for i in range(len(pts) - 1, 0, -1):
            dx = pts[i][1].x - pts[i - 1][1].x
            s = (dx > 0) - (dx < 0)
            if s != 0:
                if sign == 0:
                    sign = s
                elif s != sign:
                    break
            start = i - 1
        if sign == 0:
            return None
        xs = [p.x for _, p in pts[start:]]
        ys = [p.y for _, p in pts[start:]]
        span = xs[-1] - xs[0]
        if abs(span) < WIPE_MIN_SPAN:
            return None
        if max(abs(y - ys[0]) for y in ys) > WIPE_MAX_DRIFT:
            return None
        self.mode = RUN if self.mode == EDIT else EDIT
        self.selection = None
        self._to_idle()
        return GestureEvent(WIPE, t, payload={"dx": span})
