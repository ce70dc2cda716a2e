"""Component layout model: palette, elements, gesture application,
session documents, and projection of the layout onto the tracked quad.

Gestures edit the layout in unit-square model coordinates; rendering
warps element rects through the display-object homography so the
overlay lands on the physical mockup wherever it sits in the frame.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import gestures
from .geometry import Rect, warp_point
from .gestures import GestureEvent
from .raster import ImageRGB8, Point2, fill_convex
from .tracking import DisplayObjectTrack

DOC_VERSION = 1
DEFAULT_ELEMENT_W = 0.2
DEFAULT_ELEMENT_H = 0.1
MIN_ELEMENT_SIZE = 0.02

INPUT = "input"
OUTPUT = "output"

MOVIE_START = "movie_start"
MOVIE_STOP = "movie_stop"
MOVIE_SCROLL = "movie_scroll"

INPUT_FILL = (70, 130, 230)
OUTPUT_FILL = (230, 150, 60)
MARKER_INK = (20, 20, 20)
SELECT_BOOST = 50


class UnknownTargetError(ValueError):
    """Gesture target is neither a palette slot nor a layout element."""


class SessionParseError(ValueError):
    """Session document is not valid JSON or not a valid session."""


class VersionMismatchError(ValueError):
    """Session document was written by an incompatible version."""


@dataclass(frozen=True)
class ActionBinding:
    """Named action an input element fires; anything outside the movie
    set is treated as a custom action."""

    action: str
    params: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> dict:
        return {"action": self.action, "params": dict(self.params)}

    @staticmethod
    def from_json(doc: dict) -> "ActionBinding":
        params = tuple(sorted((str(k), str(v)) for k, v in doc.get("params", {}).items()))
        return ActionBinding(action=str(doc["action"]), params=params)


@dataclass(frozen=True)
class Element:
    element_id: str
    kind: str
    rect: Rect
    label: str = ""
    binding: ActionBinding | None = None
    locked: bool = False

    def __post_init__(self) -> None:
        if self.kind not in (INPUT, OUTPUT):
            raise ValueError(f"unknown element kind {self.kind!r}")
        r = self.rect
        if r.w <= 0 or r.h <= 0:
            raise ValueError("element rect needs positive size")
        if r.x < 0 or r.y < 0 or r.x + r.w > 1 or r.y + r.h > 1:
            raise ValueError("element rect must lie inside the unit square")


@dataclass(frozen=True)
class PaletteSlot:
    """Prototype an element is stamped from."""

    slot_id: str
    kind: str
    label: str = ""
    binding: ActionBinding | None = None


@dataclass(frozen=True)
class Palette:
    slots: tuple[PaletteSlot, ...] = ()

    def __post_init__(self) -> None:
        ids = [s.slot_id for s in self.slots]
        if len(set(ids)) != len(ids):
            raise ValueError("palette slot ids must be unique")

    def slot(self, slot_id: str) -> PaletteSlot | None:
        for s in self.slots:
            if s.slot_id == slot_id:
                return s
        return None


def default_palette() -> Palette:
    return Palette(
        (
            PaletteSlot("play", INPUT, "Play", ActionBinding(MOVIE_START)),
            PaletteSlot("stop", INPUT, "Stop", ActionBinding(MOVIE_STOP)),
            PaletteSlot("scroll", INPUT, "Scroll", ActionBinding(MOVIE_SCROLL)),
            PaletteSlot("screen", OUTPUT, "Screen", None),
        )
    )


@dataclass(frozen=True)
class Effect:
    t: float
    element_id: str
    action: str


@dataclass(frozen=True)
class SessionState:
    mode: str = gestures.EDIT
    layout: tuple[Element, ...] = ()
    selection: tuple[str, str] | None = None
    palette: Palette = field(default_factory=default_palette)
    effects_log: tuple[Effect, ...] = ()

    def __post_init__(self) -> None:
        ids = [e.element_id for e in self.layout]
        if len(set(ids)) != len(ids):
            raise ValueError("element ids must be unique")

    def element(self, element_id: str) -> Element | None:
        for e in self.layout:
            if e.element_id == element_id:
                return e
        return None


def next_element_id(layout: tuple[Element, ...]) -> str:
    top = 0
    for e in layout:
        m = re.fullmatch(r"e(\d+)", e.element_id)
        if m:
            top = max(top, int(m.group(1)))
    return f"e{top + 1}"


def _clamp_rect(x: float, y: float, w: float, h: float) -> Rect:
    w = min(max(w, MIN_ELEMENT_SIZE), 1.0)
    h = min(max(h, MIN_ELEMENT_SIZE), 1.0)
    x = min(max(x, 0.0), 1.0 - w)
    y = min(max(y, 0.0), 1.0 - h)
    return Rect(x, y, w, h)


def _replace_element(s: SessionState, el: Element) -> SessionState:
    layout = tuple(el if e.element_id == el.element_id else e for e in s.layout)
    return replace(s, layout=layout)


def apply_gesture(s: SessionState, g: GestureEvent) -> tuple[SessionState, list[Effect]]:
    """Fold one gesture into the session state.

    Returns the new state and any effects fired (Click on a bound
    element in run mode). Locked elements ignore Drag and Resize.
    """
    kind = g.kind
    if kind == gestures.SCAN:
        return s, []

    if kind == gestures.WIPE:
        mode = gestures.RUN if s.mode == gestures.EDIT else gestures.EDIT
        return replace(s, mode=mode, selection=None), []

    if kind == gestures.SELECT:
        if s.palette.slot(g.target) is not None:
            return replace(s, selection=("palette", g.target)), []
        if s.element(g.target) is not None:
            return replace(s, selection=("element", g.target)), []
        raise UnknownTargetError(f"select target {g.target!r} not found")

    if kind == gestures.PLACE:
        slot = s.palette.slot(g.target)
        if slot is None:
            raise UnknownTargetError(f"palette slot {g.target!r} not found")
        px, py = g.payload["pos"]
        rect = _clamp_rect(
            px - DEFAULT_ELEMENT_W / 2, py - DEFAULT_ELEMENT_H / 2,
            DEFAULT_ELEMENT_W, DEFAULT_ELEMENT_H,
        )
        el = Element(
            element_id=next_element_id(s.layout),
            kind=slot.kind,
            rect=rect,
            label=slot.label,
            binding=slot.binding,
        )
        return replace(s, layout=s.layout + (el,), selection=None), []

    el = s.element(g.target) if g.target is not None else None
    if el is None:
        raise UnknownTargetError(f"gesture target {g.target!r} not in layout")

    if kind == gestures.DRAG:
        if el.locked:
            return s, []
        dx, dy = g.payload["delta"]
        r = el.rect
        return _replace_element(s, replace(el, rect=_clamp_rect(r.x + dx, r.y + dy, r.w, r.h))), []

    if kind == gestures.RESIZE:
        if el.locked:
            return s, []
        scale = float(g.payload["scale"])
        r = el.rect
        c = r.center
        w = r.w * scale
        h = r.h * scale
        return _replace_element(s, replace(el, rect=_clamp_rect(c.x - w / 2, c.y - h / 2, w, h))), []

    if kind == gestures.LOCK:
        return _replace_element(s, replace(el, locked=not el.locked)), []

    if kind == gestures.CLICK:
        if s.mode == gestures.RUN and el.binding is not None:
            fx = Effect(t=g.t, element_id=el.element_id, action=el.binding.action)
            return replace(s, effects_log=s.effects_log + (fx,)), [fx]
        return s, []

    raise ValueError(f"unknown gesture kind {kind!r}")


def surface_view(s: SessionState, dobj: DisplayObjectTrack) -> gestures.SurfaceView:
    """Hit-testing snapshot of this state for the gesture FSM."""
    return gestures.SurfaceView(
        palette=tuple(slot.slot_id for slot in s.palette.slots),
        elements=tuple(
            gestures.ElementView(e.element_id, e.rect, e.locked) for e in s.layout
        ),
        homography=dobj.homography,
    )


# -- rendering --------------------------------------------------------


def render_layout(
    s: SessionState, dobj: DisplayObjectTrack, frame_w: int, frame_h: int
) -> ImageRGB8:
    """Project the layout through the current pose onto a black frame.

    Elements are painted in layout order; the selected element is drawn
    brighter; each element gets a small dark label marker near its
    top-left corner.
    """
    px = np.zeros((frame_h, frame_w, 3), dtype=np.uint8)
    if dobj.homography is None:
        return ImageRGB8(px)
    hgy = dobj.homography
    selected = s.selection[1] if s.selection and s.selection[0] == "element" else None
    for el in s.layout:
        r = el.rect
        model_corners = [
            Point2(r.x, r.y),
            Point2(r.x + r.w, r.y),
            Point2(r.x + r.w, r.y + r.h),
            Point2(r.x, r.y + r.h),
        ]
        corners = [warp_point(hgy, c) for c in model_corners]
        color = INPUT_FILL if el.kind == INPUT else OUTPUT_FILL
        if el.element_id == selected:
            color = tuple(min(c + SELECT_BOOST, 255) for c in color)
        fill_convex(px, corners, color)
        if el.label:
            mark = warp_point(hgy, Point2(r.x + 0.15 * r.w, r.y + 0.2 * r.h))
            mx, my = int(round(mark.x)), int(round(mark.y))
            px[max(my - 1, 0) : my + 2, max(mx - 1, 0) : mx + 2] = MARKER_INK
    return ImageRGB8(px)


# -- session documents -------------------------------------------------


def element_to_json(e: Element) -> dict:
    return {
        "id": e.element_id,
        "kind": e.kind,
        "rect": [e.rect.x, e.rect.y, e.rect.w, e.rect.h],
        "label": e.label,
        "binding": e.binding.to_json() if e.binding else None,
        "locked": e.locked,
    }


def slot_to_json(s: PaletteSlot) -> dict:
    return {
        "id": s.slot_id,
        "kind": s.kind,
        "label": s.label,
        "binding": s.binding.to_json() if s.binding else None,
    }


def save_session(s: SessionState) -> bytes:
    """Serialize mode, palette and layout (not selection, not effects)
    as deterministic JSON."""
    doc = {
        "version": DOC_VERSION,
        "mode": s.mode,
        "palette": [slot_to_json(slot) for slot in s.palette.slots],
        "layout": [element_to_json(e) for e in s.layout],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _parse_binding(doc) -> ActionBinding | None:
    if doc is None:
        return None
    if not isinstance(doc, dict) or "action" not in doc:
        raise SessionParseError("binding must be null or an object with an action")
    return ActionBinding.from_json(doc)


def load_session(data: bytes | str) -> SessionState:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SessionParseError(
            f"bad session document at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise SessionParseError("session document must be a JSON object")
    version = doc.get("version")
    if version != DOC_VERSION:
        raise VersionMismatchError(f"unsupported session version {version!r}")
    try:
        slots = tuple(
            PaletteSlot(
                slot_id=str(d["id"]),
                kind=str(d["kind"]),
                label=str(d.get("label", "")),
                binding=_parse_binding(d.get("binding")),
            )
            for d in doc["palette"]
        )
        layout = tuple(
            Element(
                element_id=str(d["id"]),
                kind=str(d["kind"]),
                rect=Rect(*(float(v) for v in d["rect"])),
                label=str(d.get("label", "")),
                binding=_parse_binding(d.get("binding")),
                locked=bool(d.get("locked", False)),
            )
            for d in doc["layout"]
        )
        mode = str(doc["mode"])
        if mode not in (gestures.EDIT, gestures.RUN):
            raise SessionParseError(f"unknown mode {mode!r}")
        return SessionState(mode=mode, layout=layout, palette=Palette(slots))
    except SessionParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SessionParseError(f"bad session document: {exc}") from exc
