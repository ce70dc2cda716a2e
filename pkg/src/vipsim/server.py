"""Session protocol server.

Speaks newline-delimited JSON over TCP; if the first bytes look like an
HTTP GET, the connection is upgraded to a WebSocket (RFC 6455, text
frames) so browsers can connect directly. One client at a time; the
world only advances while a client is connected.

Client -> server (every message needs numeric "t" and strictly
increasing "seq"):
  {"type":"marker_move","t":..,"seq":..,"x":..,"y":..}
  {"type":"tap","t":..,"seq":..}
  {"type":"pose_set","t":..,"seq":..,"corners":[x0,y0,..,x3,y3]}
  {"type":"config","t":..,"seq":..[,"audio_threshold":..]}

Server -> client: the pipeline's move/tap/gesture/effect events plus a
per-frame {"type":"snapshot",...}; all messages carry "t" and a
monotone "seq".
"""
from __future__ import annotations

import asyncio
import base64
import hashlib
import json

import numpy as np

from .audio import SAMPLE_RATE, AudioBuffer, TapSensor
from .geometry import DegenerateQuadError, Quad
from .model import element_to_json, slot_to_json
from .raster import Point2
from .session import SessionRunner
from .world import (
    Scenario,
    Track,
    WorldState,
    burst_samples,
    render_world,
)

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
TAP_KEEP_MS = 200.0


class ProtocolError(Exception):
    """Client broke the message contract; connection will be closed."""


class ConnectionClosed(Exception):
    pass


def ws_accept_value(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_encode_text(text: str) -> bytes:
    payload = text.encode("utf-8")
    n = len(payload)
    if n < 126:
        head = bytes([0x81, n])
    elif n < 1 << 16:
        head = bytes([0x81, 126]) + n.to_bytes(2, "big")
    else:
        head = bytes([0x81, 127]) + n.to_bytes(8, "big")
    return head + payload


def _ws_encode_control(opcode: int, payload: bytes = b"") -> bytes:
    if len(payload) > 125:
        payload = payload[:125]
    return bytes([0x80 | opcode, len(payload)]) + payload


class WsParser:
    """Incremental frame parser for masked client frames."""

    def __init__(self) -> None:
        self._buf = bytearray()
        self._fragments: list[bytes] = []
        self._frag_opcode: int | None = None

    def feed(self, data: bytes) -> list[tuple[int, bytes]]:
        """Returns complete (opcode, payload) messages; fragmented data
        frames are reassembled and reported once, on FIN."""
        self._buf.extend(data)
        out: list[tuple[int, bytes]] = []
        while True:
            frame = self._next_frame()
            if frame is None:
                return out
            fin, opcode, payload = frame
            if opcode in (0x8, 0x9, 0xA):
                if not fin:
                    raise ProtocolError("fragmented control frame")
                out.append((opcode, payload))
                continue
            if opcode == 0x0:
                if self._frag_opcode is None:
                    raise ProtocolError("continuation without a start frame")
                self._fragments.append(payload)
                if fin:
                    out.append((self._frag_opcode, b"".join(self._fragments)))
                    self._fragments = []
                    self._frag_opcode = None
                continue
            if self._frag_opcode is not None:
                raise ProtocolError("new data frame inside a fragmented message")
            if fin:
                out.append((opcode, payload))
            else:
                self._frag_opcode = opcode
                self._fragments = [payload]

    def _next_frame(self) -> tuple[bool, int, bytes] | None:
        buf = self._buf
        if len(buf) < 2:
            return None
        b0, b1 = buf[0], buf[1]
        if b0 & 0x70:
            raise ProtocolError("reserved frame bits set")
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        if not (b1 & 0x80):
            raise ProtocolError("client frames must be masked")
        length = b1 & 0x7F
        pos = 2
        if length == 126:
            if len(buf) < pos + 2:
                return None
            length = int.from_bytes(buf[pos : pos + 2], "big")
            pos += 2
        elif length == 127:
            if len(buf) < pos + 8:
                return None
            length = int.from_bytes(buf[pos : pos + 8], "big")
            pos += 8
        if len(buf) < pos + 4 + length:
            return None
        key = buf[pos : pos + 4]
        pos += 4
        masked = buf[pos : pos + length]
        mask = (bytes(key) * (length // 4 + 1))[:length]
        payload = bytes(a ^ b for a, b in zip(masked, mask))
        del buf[: pos + length]
        return fin, opcode, payload


class _Transport:
    """One client connection, NDJSON either raw or in WS text frames."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer
        self.is_websocket = False
        self._parser: WsParser | None = None
        self._pending: list[str] = []
        self._raw_tail = b""

    async def handshake(self) -> None:
        """Sniff the first bytes; upgrade to WebSocket on an HTTP GET."""
        first = await self.reader.read(4)
        if first == b"GET ":
            header = first
            while b"\r\n\r\n" not in header:
                chunk = await self.reader.read(1024)
                if not chunk:
                    raise ConnectionClosed()
                header += chunk
                if len(header) > 64 * 1024:
                    raise ProtocolError("oversized handshake")
            head, _, tail = header.partition(b"\r\n\r\n")
            key = None
            for line in head.split(b"\r\n")[1:]:
                name, _, value = line.partition(b":")
                if name.strip().lower() == b"sec-websocket-key":
                    key = value.strip().decode("ascii")
            if key is None:
                raise ProtocolError("missing Sec-WebSocket-Key")
            accept = ws_accept_value(key)
            self.writer.write(
                b"HTTP/1.1 101 Switching Protocols\r\n"
                b"Upgrade: websocket\r\n"
                b"Connection: Upgrade\r\n"
                b"Sec-WebSocket-Accept: " + accept.encode("ascii") + b"\r\n\r\n"
            )
            await self.writer.drain()
            self.is_websocket = True
            self._parser = WsParser()
            if tail:
                self._feed_ws(tail)
        else:
            self._raw_tail = first

    def _feed_ws(self, data: bytes) -> None:
        assert self._parser is not None
        for opcode, payload in self._parser.feed(data):
            if opcode == 0x8:
                raise ConnectionClosed()
            if opcode == 0x9:
                self.writer.write(_ws_encode_control(0xA, payload))
            elif opcode == 0x1:
                self._pending.append(payload.decode("utf-8"))
            # binary frames and pongs are ignored

    async def recv(self) -> str:
        """Next NDJSON message text (one JSON document)."""
        if self.is_websocket:
            while not self._pending:
                data = await self.reader.read(4096)
                if not data:
                    raise ConnectionClosed()
                self._feed_ws(data)
            return self._pending.pop(0)
        while b"\n" not in self._raw_tail:
            data = await self.reader.read(4096)
            if not data:
                raise ConnectionClosed()
            self._raw_tail += data
        line, _, self._raw_tail = self._raw_tail.partition(b"\n")
        return line.decode("utf-8")

    async def send(self, text: str) -> None:
        if self.is_websocket:
            self.writer.write(ws_encode_text(text))
        else:
            self.writer.write(text.encode("utf-8") + b"\n")
        await self.writer.drain()

    async def close(self) -> None:
        try:
            if self.is_websocket:
                self.writer.write(_ws_encode_control(0x8))
                await self.writer.drain()
            self.writer.close()
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


class SessionServer:
    """Live session: one client steers the world, the pipeline runs at
    the scenario frame rate, events and snapshots stream back."""

    def __init__(self, scenario: Scenario | None = None, host: str = "127.0.0.1", port: int = 0):
        self.scenario = scenario or _default_live_scenario()
        self.host = host
        self.port = port
        w = self.scenario.world
        self.marker_pos: Point2 | None = w.marker_at(0.0)
        self.pose: Quad | None = w.pose_at(0.0)
        self.runner = SessionRunner(self.scenario)
        self.sensor = TapSensor(
            spec=self.scenario.audio.band,
            threshold=self.scenario.audio.threshold,
            refractory_ms=self.scenario.audio.refractory_ms,
        )
        self.frame_index = 0
        self._sample_cursor = 0
        self._tap_times: list[float] = []
        self._seq = 0
        self._client_seq: float | None = None
        self._busy = False
        self._server: asyncio.AbstractServer | None = None

    # -- lifecycle ----------------------------------------------------

    async def start(self) -> None:
        self._server = await asyncio.start_server(self._on_client, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]

    async def serve_forever(self) -> None:
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def _on_client(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        transport = _Transport(reader, writer)
        if self._busy:
            try:
                await transport.handshake()
                await transport.send(json.dumps({"type": "error", "message": "busy", "t": self._now(), "seq": -1}))
            except (ProtocolError, ConnectionClosed, ConnectionError):
                pass
            await transport.close()
            return
        self._busy = True
        try:
            await transport.handshake()
            await self._run_client(transport)
        except (ProtocolError, ConnectionClosed, ConnectionError, OSError):
            pass
        finally:
            self._busy = False
            await transport.close()

    # -- protocol -----------------------------------------------------

    def _now(self) -> float:
        return round(self.frame_index * 1000.0 / self.scenario.world.frame_rate, 3)

    async def _send(self, transport: _Transport, doc: dict) -> None:
        doc = dict(doc)
        doc["seq"] = self._seq
        self._seq += 1
        doc.setdefault("t", self._now())
        await transport.send(json.dumps(doc, sort_keys=True, separators=(",", ":")))

    def _handle_message(self, text: str) -> None:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"bad JSON: {exc.msg}") from exc
        if not isinstance(doc, dict) or "type" not in doc:
            raise ProtocolError("message must be an object with a type")
        if not isinstance(doc.get("t"), (int, float)):
            raise ProtocolError("message needs a numeric t")
        seq = doc.get("seq")
        if not isinstance(seq, (int, float)):
            raise ProtocolError("message needs a numeric seq")
        if self._client_seq is not None and seq <= self._client_seq:
            raise ProtocolError("client seq must be strictly increasing")
        self._client_seq = seq

        kind = doc["type"]
        if kind == "marker_move":
            try:
                self.marker_pos = Point2(float(doc["x"]), float(doc["y"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError("marker_move needs numeric x and y") from exc
        elif kind == "tap":
            self._tap_times.append(self._sample_cursor * 1000.0 / SAMPLE_RATE)
        elif kind == "pose_set":
            corners = doc.get("corners")
            if not isinstance(corners, list) or len(corners) != 8:
                raise ProtocolError("pose_set needs corners: [x0,y0,...,x3,y3]")
            try:
                vals = [float(v) for v in corners]
                self.pose = Quad(
                    (
                        Point2(vals[0], vals[1]),
                        Point2(vals[2], vals[3]),
                        Point2(vals[4], vals[5]),
                        Point2(vals[6], vals[7]),
                    )
                )
            except (DegenerateQuadError, TypeError, ValueError) as exc:
                raise ProtocolError(f"bad pose: {exc}") from exc
        elif kind == "config":
            if "audio_threshold" in doc:
                try:
                    self.sensor = TapSensor(
                        spec=self.scenario.audio.band,
                        threshold=float(doc["audio_threshold"]),
                        refractory_ms=self.scenario.audio.refractory_ms,
                    )
                except (TypeError, ValueError) as exc:
                    raise ProtocolError(f"bad config: {exc}") from exc
        else:
            raise ProtocolError(f"unknown message type {kind!r}")

    # -- the live loop ------------------------------------------------

    def _live_world(self, t: float) -> WorldState:
        w = self.scenario.world
        kwargs = dict(
            duration_ms=max(t, 0.0),
            frame_w=w.frame_w,
            frame_h=w.frame_h,
            frame_rate=w.frame_rate,
            marker_hsv=w.marker_hsv,
            marker_thresholds=w.marker_thresholds,
            luminance_sigma=w.luminance_sigma,
            audio_noise_rms=w.audio_noise_rms,
            noise_seed=w.noise_seed,
        )
        if self.marker_pos is not None:
            kwargs["marker_path"] = Track(((0.0, (self.marker_pos.x, self.marker_pos.y)),))
        if self.pose is not None:
            c = self.pose.corners
            kwargs["quad_pose"] = Track(
                ((0.0, (c[0].x, c[0].y, c[1].x, c[1].y, c[2].x, c[2].y, c[3].x, c[3].y)),)
            )
        return WorldState(**kwargs)

    def _audio_chunk(self, t0: float, t1: float) -> AudioBuffer:
        n0 = int(round(t0 * SAMPLE_RATE / 1000.0))
        n1 = int(round(t1 * SAMPLE_RATE / 1000.0))
        self._sample_cursor = n1
        n = n1 - n0
        sig = burst_samples(n0 * 1000.0 / SAMPLE_RATE, n, tuple(self._tap_times))
        w = self.scenario.world
        if w.audio_noise_rms > 0:
            rng = np.random.default_rng((w.noise_seed, 0xA0D10, self.frame_index))
            sig = sig + rng.normal(0.0, w.audio_noise_rms, n)
        cutoff = t0 - TAP_KEEP_MS
        self._tap_times = [tt for tt in self._tap_times if tt >= cutoff]
        pcm = np.clip(np.rint(sig * 32767.0), -32768, 32767).astype(np.int16)
        return AudioBuffer(pcm, start_t=n0 * 1000.0 / SAMPLE_RATE)

    async def _run_client(self, transport: _Transport) -> None:
        queue: asyncio.Queue[str] = asyncio.Queue()

        async def read_loop() -> None:
            while True:
                queue.put_nowait(await transport.recv())

        reader_task = asyncio.create_task(read_loop())
        dt = 1000.0 / self.scenario.world.frame_rate
        sent = len(self.runner.events)
        try:
            await self._send(transport, self._snapshot())
            while True:
                try:
                    while True:
                        self._handle_message(queue.get_nowait())
                except asyncio.QueueEmpty:
                    pass
                t = self.frame_index * dt
                if self.frame_index > 0:
                    taps = self.sensor.process(self._audio_chunk(t - dt, t))
                else:
                    taps = []
                frame = render_world(self._live_world(t), t)
                move = self.runner.process_frame(frame, t)
                self.runner.step_events(t, taps, move)
                self.frame_index += 1
                while sent < len(self.runner.events):
                    await self._send(transport, self.runner.events[sent])
                    sent += 1
                await self._send(transport, self._snapshot())
                if reader_task.done():
                    reader_task.result()
                await asyncio.sleep(dt / 1000.0)
        except ProtocolError as exc:
            try:
                await self._send(transport, {"type": "error", "message": str(exc)})
            except (ConnectionError, ConnectionClosed, OSError):
                pass
            raise
        finally:
            reader_task.cancel()

    def _snapshot(self) -> dict:
        s = self.runner.state
        dobj = self.runner.dobj
        quad = None
        if dobj.quad is not None:
            quad = [[round(c.x, 3), round(c.y, 3)] for c in dobj.quad.corners]
        marker = None
        if self.runner.marker.live_centre is not None:
            c = self.runner.marker.live_centre
            marker = [round(c.x, 3), round(c.y, 3)]
        return {
            "type": "snapshot",
            "t": self._now(),
            "mode": s.mode,
            "selection": list(s.selection) if s.selection else None,
            "palette": [slot_to_json(slot) for slot in s.palette.slots],
            "layout": [element_to_json(e) for e in s.layout],
            "quad": quad,
            "marker": marker,
        }


def _default_live_scenario() -> Scenario:
    world = WorldState(
        duration_ms=0.0,
        quad_pose=Track(((0.0, (160.0, 120.0, 480.0, 120.0, 480.0, 360.0, 160.0, 360.0)),)),
    )
    return Scenario(world=world)


async def serve(scenario: Scenario | None, host: str, port: int) -> None:
    server = SessionServer(scenario, host=host, port=port)
    await server.start()
    print(f"listening on {server.host}:{server.port}", flush=True)
    await server.serve_forever()
