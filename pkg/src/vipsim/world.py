"""Ground-truth synthetic world standing in for camera, mic and desk.

A scenario scripts the world: piecewise-linear marker and display-quad
trajectories, tap times, and noise levels. render_world draws one
camera frame; synth_audio renders the microphone take. Everything is
seeded, so a scenario plus a seed fully determines every byte the
pipeline sees.
"""
from __future__ import annotations

import colorsys
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .audio import (
    DEFAULT_HIGH_HZ,
    DEFAULT_LOW_HZ,
    DEFAULT_REFRACTORY_MS,
    DEFAULT_THRESHOLD,
    SAMPLE_RATE,
    AudioBuffer,
    BandPassSpec,
)
from .geometry import Quad
from .model import ActionBinding, Palette, PaletteSlot, default_palette
from .raster import ImageRGB8, Point2, fill_convex
from .segmentation import HsvThresholds

BG_VALUE = 15
QUAD_VALUE = 230
MARKER_RADIUS = 8.0
TAP_PEAK = 0.8
TAP_FREQ_HZ = 2000.0
TAP_TAU_MS = 15.0
TAP_SPAN_MS = 8 * TAP_TAU_MS  # burst treated as silent past this point

DEFAULT_MARKER_HSV = (170, 200, 220)
DEFAULT_MARKER_THRESHOLDS = HsvThresholds(160, 180, 100, 255, 100, 255)


class ScenarioError(ValueError):
    """Scenario file is malformed or inconsistent."""


def hsv_to_rgb_u8(h: int, s: int, v: int) -> tuple[int, int, int]:
    """HSV (hue in 256 steps for 360 degrees) to 8-bit RGB."""
    r, g, b = colorsys.hsv_to_rgb(h / 256.0, s / 255.0, v / 255.0)
    return int(round(r * 255)), int(round(g * 255)), int(round(b * 255))


@dataclass(frozen=True)
class Track:
    """Piecewise-linear vector track over time (ms); constant
    extrapolation outside the keyed range."""

    keys: tuple[tuple[float, tuple[float, ...]], ...]

    def __post_init__(self) -> None:
        if not self.keys:
            raise ScenarioError("track needs at least one key")
        times = [k[0] for k in self.keys]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ScenarioError("track keys must be in time order")
        n = {len(k[1]) for k in self.keys}
        if len(n) != 1:
            raise ScenarioError("track keys must share one dimension")

    def at(self, t: float) -> tuple[float, ...]:
        keys = self.keys
        if t <= keys[0][0]:
            return keys[0][1]
        if t >= keys[-1][0]:
            return keys[-1][1]
        for (t0, v0), (t1, v1) in zip(keys, keys[1:]):
            if t0 <= t <= t1:
                if t1 == t0:
                    return v1
                f = (t - t0) / (t1 - t0)
                return tuple(a + (b - a) * f for a, b in zip(v0, v1))
        return keys[-1][1]


@dataclass(frozen=True)
class WorldState:
    """Everything the simulated sensors can see or hear."""

    duration_ms: float
    frame_w: int = 640
    frame_h: int = 480
    frame_rate: float = 30.0
    marker_path: Track | None = None
    marker_hsv: tuple[int, int, int] = DEFAULT_MARKER_HSV
    marker_thresholds: HsvThresholds = DEFAULT_MARKER_THRESHOLDS
    quad_pose: Track | None = None
    taps: tuple[float, ...] = ()
    luminance_sigma: float = 0.0
    audio_noise_rms: float = 0.0
    noise_seed: int = 0

    def __post_init__(self) -> None:
        if self.duration_ms < 0 or self.frame_rate <= 0:
            raise ScenarioError("duration must be >= 0 and frame rate > 0")

    def marker_at(self, t: float) -> Point2 | None:
        if self.marker_path is None:
            return None
        x, y = self.marker_path.at(t)
        return Point2(x, y)

    def pose_at(self, t: float) -> Quad | None:
        if self.quad_pose is None:
            return None
        v = self.quad_pose.at(t)
        return Quad((Point2(v[0], v[1]), Point2(v[2], v[3]), Point2(v[4], v[5]), Point2(v[6], v[7])))


def render_world(w: WorldState, t: float) -> ImageRGB8:
    """Draw the camera frame at time t (ms).

    Dark background, bright display quad, marker disk in the marker
    color, then per-frame Gaussian luminance noise (the same offset on
    all three channels of a pixel, so chroma survives)."""
    if not (0 <= t <= w.duration_ms):
        raise ValueError(f"t={t} outside scenario duration")
    px = np.full((w.frame_h, w.frame_w, 3), BG_VALUE, dtype=np.uint8)
    pose = w.pose_at(t)
    if pose is not None:
        fill_convex(px, pose.corners, (QUAD_VALUE, QUAD_VALUE, QUAD_VALUE))
    m = w.marker_at(t)
    if m is not None:
        color = hsv_to_rgb_u8(*w.marker_hsv)
        r = MARKER_RADIUS
        x0 = max(int(math.floor(m.x - r)), 0)
        x1 = min(int(math.ceil(m.x + r)) + 1, w.frame_w)
        y0 = max(int(math.floor(m.y - r)), 0)
        y1 = min(int(math.ceil(m.y + r)) + 1, w.frame_h)
        if x0 < x1 and y0 < y1:
            yy, xx = np.mgrid[y0:y1, x0:x1]
            disk = (xx - m.x) ** 2 + (yy - m.y) ** 2 <= r * r
            px[y0:y1, x0:x1][disk] = color
    if w.luminance_sigma > 0:
        rng = np.random.default_rng((w.noise_seed, int(round(t * 1000))))
        noise = rng.normal(0.0, w.luminance_sigma, (w.frame_h, w.frame_w))
        out = np.clip(np.rint(px.astype(np.float64) + noise[:, :, None]), 0, 255)
        px = out.astype(np.uint8)
    return ImageRGB8(px)


def burst_samples(t0_ms: float, n: int, tap_times: tuple[float, ...]) -> np.ndarray:
    """Sum of active tap bursts over n samples starting at t0_ms,
    in normalized units (closed form; no state between chunks)."""
    t = t0_ms + np.arange(n) * (1000.0 / SAMPLE_RATE)
    out = np.zeros(n, dtype=np.float64)
    for tap in tap_times:
        if tap > t[-1] or tap + TAP_SPAN_MS < t0_ms:
            continue
        dt = t - tap
        active = dt >= 0
        d = dt[active]
        out[active] += TAP_PEAK * np.exp(-d / TAP_TAU_MS) * np.sin(
            2 * np.pi * TAP_FREQ_HZ * d / 1000.0
        )
    return out


def synth_audio(w: WorldState) -> AudioBuffer:
    """Microphone take for the whole scenario: white noise at the
    configured RMS plus one decaying 2 kHz burst per scripted tap."""
    n = int(round(w.duration_ms * SAMPLE_RATE / 1000.0))
    sig = burst_samples(0.0, n, w.taps)
    if w.audio_noise_rms > 0:
        rng = np.random.default_rng((w.noise_seed, 0xA0D10))
        sig = sig + rng.normal(0.0, w.audio_noise_rms, n)
    pcm = np.clip(np.rint(sig * 32767.0), -32768, 32767).astype(np.int16)
    return AudioBuffer(pcm, start_t=0.0)


def tilted_pose(
    cx: float,
    cy: float,
    half_w: float,
    half_h: float,
    tilt_deg: float,
    axis_deg: float,
    focal: float = 800.0,
) -> Quad:
    """Pinhole projection of a rectangle tilted out of the camera plane.

    The rectangle sits at depth `focal`, rotated tilt_deg about an
    in-plane axis at axis_deg. Small tilts keep the projected corners
    in TL,TR,BR,BL order."""
    ax, ay = math.cos(math.radians(axis_deg)), math.sin(math.radians(axis_deg))
    st, ct = math.sin(math.radians(tilt_deg)), math.cos(math.radians(tilt_deg))
    corners = []
    for u, v in ((-half_w, -half_h), (half_w, -half_h), (half_w, half_h), (-half_w, half_h)):
        # Rodrigues rotation of (u, v, 0) about unit axis (ax, ay, 0)
        dot = u * ax + v * ay
        rx = u * ct + ax * dot * (1 - ct)
        ry = v * ct + ay * dot * (1 - ct)
        rz = st * (ay * u - ax * v)
        z = focal + rz
        corners.append(Point2(cx + focal * rx / z, cy + focal * ry / z))
    return Quad(tuple(corners))


@dataclass(frozen=True)
class AudioParams:
    band: BandPassSpec = field(default_factory=BandPassSpec)
    threshold: float = DEFAULT_THRESHOLD
    refractory_ms: float = DEFAULT_REFRACTORY_MS


@dataclass(frozen=True)
class Scenario:
    """A scripted world plus the session configuration that runs on it."""

    world: WorldState
    palette: Palette = field(default_factory=default_palette)
    audio: AudioParams = field(default_factory=AudioParams)


def _parse_track(doc, dim: int, what: str) -> Track:
    if not isinstance(doc, list) or not doc:
        raise ScenarioError(f"{what} must be a nonempty list of keyframes")
    keys = []
    for row in doc:
        if not isinstance(row, list) or len(row) != dim + 1:
            raise ScenarioError(f"{what} keyframes need {dim + 1} numbers [t, ...]")
        keys.append((float(row[0]), tuple(float(v) for v in row[1:])))
    return Track(tuple(keys))


def _parse_palette(doc) -> Palette:
    slots = []
    for d in doc:
        binding = None
        if d.get("binding") is not None:
            binding = ActionBinding.from_json(d["binding"])
        slots.append(
            PaletteSlot(
                slot_id=str(d["id"]),
                kind=str(d["kind"]),
                label=str(d.get("label", "")),
                binding=binding,
            )
        )
    return Palette(tuple(slots))


def parse_scenario(text: str | bytes) -> Scenario:
    """Parse a scenario JSON document; raises ScenarioError on any
    structural problem."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"bad scenario at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict) or "duration_ms" not in doc:
        raise ScenarioError("scenario must be an object with duration_ms")
    try:
        frame = doc.get("frame", {})
        noise = doc.get("noise", {})
        marker = doc.get("marker")
        display = doc.get("display")

        kwargs: dict = {
            "duration_ms": float(doc["duration_ms"]),
            "frame_w": int(frame.get("w", 640)),
            "frame_h": int(frame.get("h", 480)),
            "frame_rate": float(frame.get("fps", 30.0)),
            "taps": tuple(float(t) for t in doc.get("taps", ())),
            "luminance_sigma": float(noise.get("luminance_sigma", 0.0)),
            "audio_noise_rms": float(noise.get("audio_rms", 0.0)),
            "noise_seed": int(doc.get("seed", 0)),
        }
        if marker is not None:
            kwargs["marker_path"] = _parse_track(marker["path"], 2, "marker.path")
            if "color_hsv" in marker:
                h, s, v = (int(v) for v in marker["color_hsv"])
                kwargs["marker_hsv"] = (h, s, v)
            if "thresholds" in marker:
                th = marker["thresholds"]
                kwargs["marker_thresholds"] = HsvThresholds(
                    int(th["hue"][0]), int(th["hue"][1]),
                    int(th["sat"][0]), int(th["sat"][1]),
                    int(th["val"][0]), int(th["val"][1]),
                )
        if display is not None:
            kwargs["quad_pose"] = _parse_track(display["pose"], 8, "display.pose")
        world = WorldState(**kwargs)

        palette = default_palette()
        if "palette" in doc:
            palette = _parse_palette(doc["palette"])
        audio = AudioParams()
        if "audio" in doc:
            a = doc["audio"]
            band = BandPassSpec(
                float(a.get("band", [DEFAULT_LOW_HZ, DEFAULT_HIGH_HZ])[0]),
                float(a.get("band", [DEFAULT_LOW_HZ, DEFAULT_HIGH_HZ])[1]),
            )
            audio = AudioParams(
                band=band,
                threshold=float(a.get("threshold", DEFAULT_THRESHOLD)),
                refractory_ms=float(a.get("refractory_ms", DEFAULT_REFRACTORY_MS)),
            )
        return Scenario(world=world, palette=palette, audio=audio)
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario: {exc}") from exc


def with_seed(sc: Scenario, seed: int | None) -> Scenario:
    if seed is None:
        return sc
    return replace(sc, world=replace(sc.world, noise_seed=seed))
