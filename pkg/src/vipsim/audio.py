"""Tap detection from the surface microphone.

The raw signal is band-pass filtered to the tap energy band, then
scanned for threshold crossings. Each run of samples above threshold
yields one tap at the run's peak, debounced by a refractory interval.
"""
from __future__ import annotations

import wave
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

SAMPLE_RATE = 16000
PCM_FULL_SCALE = 32768.0

DEFAULT_LOW_HZ = 300.0
DEFAULT_HIGH_HZ = 4000.0
DEFAULT_THRESHOLD = 0.25
DEFAULT_REFRACTORY_MS = 100.0


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM16 samples starting at start_t milliseconds."""

    samples: np.ndarray
    start_t: float = 0.0
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        s = np.asarray(self.samples)
        if s.dtype != np.int16 or s.ndim != 1:
            raise ValueError("samples must be a 1-D int16 array")
        if self.sample_rate != SAMPLE_RATE:
            raise ValueError(f"sample_rate must be {SAMPLE_RATE}")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def duration_ms(self) -> float:
        return len(self.samples) * 1000.0 / self.sample_rate


@dataclass(frozen=True)
class BandPassSpec:
    low_hz: float = DEFAULT_LOW_HZ
    high_hz: float = DEFAULT_HIGH_HZ

    def __post_init__(self) -> None:
        if not (0 < self.low_hz < self.high_hz < SAMPLE_RATE / 2):
            raise ValueError("need 0 < low_hz < high_hz < Nyquist")


@dataclass(frozen=True)
class TapEvent:
    t: float
    peak: float


def biquad_coeffs(spec: BandPassSpec) -> tuple[np.ndarray, np.ndarray]:
    """Second-order band-pass, unit gain at the center frequency.

    Center frequency is the geometric mean of the cutoffs; Q comes from
    the bandwidth, so the -3 dB points land near the cutoffs.
    """
    f0 = np.sqrt(spec.low_hz * spec.high_hz)
    q = f0 / (spec.high_hz - spec.low_hz)
    w0 = 2 * np.pi * f0 / SAMPLE_RATE
    alpha = np.sin(w0) / (2 * q)
    b = np.array([alpha, 0.0, -alpha])
    a = np.array([1 + alpha, -2 * np.cos(w0), 1 - alpha])
    return b / a[0], a / a[0]


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(x), -32768, 32767).astype(np.int16)


def band_pass(buf: AudioBuffer, spec: BandPassSpec | None = None) -> AudioBuffer:
    """Causal single-pass biquad filter; length and timestamps unchanged."""
    b, a = biquad_coeffs(spec or BandPassSpec())
    y = signal.lfilter(b, a, buf.samples.astype(np.float64))
    return AudioBuffer(_quantize(y), start_t=buf.start_t)


def detect_taps(
    buf: AudioBuffer,
    threshold: float = DEFAULT_THRESHOLD,
    refractory_ms: float = DEFAULT_REFRACTORY_MS,
) -> list[TapEvent]:
    """Scan a (band-passed) buffer for taps.

    A tap sits at the local maximum of each run of |sample|/32768
    exceeding threshold. A run starting within refractory_ms of the
    last reported tap is suppressed entirely.
    """
    if not (0 < threshold <= 1):
        raise ValueError("threshold must be in (0, 1]")
    sensor = TapSensor(threshold=threshold, refractory_ms=refractory_ms, filtered=True)
    taps = sensor.process(buf)
    taps.extend(sensor.flush())
    return taps


@dataclass
class TapSensor:
    """Streaming tap detector carrying filter and run state across chunks.

    Feeding a signal chunk by chunk produces the same taps as one
    detect_taps call over the whole signal (after flush). Set
    filtered=True when the input is already band-passed.
    """

    spec: BandPassSpec = field(default_factory=BandPassSpec)
    threshold: float = DEFAULT_THRESHOLD
    refractory_ms: float = DEFAULT_REFRACTORY_MS
    filtered: bool = False

    def __post_init__(self) -> None:
        if not (0 < self.threshold <= 1):
            raise ValueError("threshold must be in (0, 1]")
        self._b, self._a = biquad_coeffs(self.spec)
        self._zi = np.zeros(2)
        self._run_peak = 0.0
        self._run_peak_t = 0.0
        self._run_start_t = 0.0
        self._in_run = False
        self._last_tap_t: float | None = None

    def process(self, buf: AudioBuffer) -> list[TapEvent]:
        """Feed one chunk; returns taps whose runs completed inside it."""
        if self.filtered:
            y = buf.samples
        else:
            yf, self._zi = signal.lfilter(
                self._b, self._a, buf.samples.astype(np.float64), zi=self._zi
            )
            y = _quantize(yf)
        level = np.abs(y.astype(np.int32)) / PCM_FULL_SCALE
        above = level > self.threshold
        dt = 1000.0 / buf.sample_rate
        taps: list[TapEvent] = []
        # vectorized run scan: indices where the above/below state flips
        flips = np.nonzero(np.diff(above.astype(np.int8)))[0] + 1
        bounds = np.concatenate(([0], flips, [len(above)]))
        for s, e in zip(bounds[:-1], bounds[1:]):
            s = int(s)
            if not above[s]:
                if self._in_run:
                    taps.extend(self._end_run())
                continue
            if not self._in_run:
                self._in_run = True
                self._run_start_t = buf.start_t + s * dt
                self._run_peak = -1.0
            seg = level[s:e]
            k = int(np.argmax(seg))
            if seg[k] > self._run_peak:
                self._run_peak = float(seg[k])
                self._run_peak_t = buf.start_t + (s + k) * dt
        return taps

    def flush(self) -> list[TapEvent]:
        """Close out a run left open at end of stream."""
        if self._in_run:
            return self._end_run()
        return []

    def _end_run(self) -> list[TapEvent]:
        self._in_run = False
        start, peak, peak_t = self._run_start_t, self._run_peak, self._run_peak_t
        if self._last_tap_t is not None and start - self._last_tap_t < self.refractory_ms:
            return []
        self._last_tap_t = peak_t
        return [TapEvent(t=peak_t, peak=peak)]


def read_wav(path: str) -> AudioBuffer:
    """Read a RIFF WAV file; must be mono PCM16 at 16 kHz."""
    with wave.open(path, "rb") as w:
        if w.getnchannels() != 1 or w.getsampwidth() != 2:
            raise ValueError("expected mono 16-bit PCM")
        if w.getframerate() != SAMPLE_RATE:
            raise ValueError(f"expected {SAMPLE_RATE} Hz, got {w.getframerate()}")
        raw = w.readframes(w.getnframes())
    return AudioBuffer(np.frombuffer(raw, dtype="<i2").astype(np.int16))


def write_wav(path: str, buf: AudioBuffer) -> None:
    with wave.open(path, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate)
        w.writeframes(buf.samples.astype("<i2").tobytes())
