import asyncio
import json

import pytest

from vipsim import parse_scenario
from vipsim.server import (
    ProtocolError,
    SessionServer,
    WsParser,
    ws_accept_value,
    ws_encode_text,
)

# -- frame codec helpers (client side of the wire) -------------------


def mask_frame(payload: bytes, opcode: int = 0x1, fin: bool = True,
               key: bytes = b"\x11\x22\x33\x44") -> bytes:
    b0 = (0x80 if fin else 0x00) | opcode
    n = len(payload)
    if n < 126:
        head = bytes([b0, 0x80 | n])
    elif n < 1 << 16:
        head = bytes([b0, 0x80 | 126]) + n.to_bytes(2, "big")
    else:
        head = bytes([b0, 0x80 | 127]) + n.to_bytes(8, "big")
    masked = bytes(c ^ key[i % 4] for i, c in enumerate(payload))
    return head + key + masked


class ServerFrames:
    """Decoder for the unmasked frames a server writes."""

    def __init__(self, initial: bytes = b""):
        self.buf = bytearray(initial)

    def parse_one(self):
        if len(self.buf) < 2:
            return None
        b0, b1 = self.buf[0], self.buf[1]
        assert not (b1 & 0x80), "server frames are never masked"
        length = b1 & 0x7F
        pos = 2
        if length == 126:
            if len(self.buf) < 4:
                return None
            length = int.from_bytes(self.buf[2:4], "big")
            pos = 4
        elif length == 127:
            if len(self.buf) < 10:
                return None
            length = int.from_bytes(self.buf[2:10], "big")
            pos = 10
        if len(self.buf) < pos + length:
            return None
        payload = bytes(self.buf[pos : pos + length])
        opcode = b0 & 0x0F
        del self.buf[: pos + length]
        return opcode, payload

    async def next(self, reader):
        while True:
            frame = self.parse_one()
            if frame is not None:
                return frame
            data = await reader.read(4096)
            if not data:
                raise ConnectionError("server closed")
            self.buf.extend(data)


def test_accept_value_matches_the_rfc_example():
    assert ws_accept_value("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="


def test_text_frame_length_encodings():
    for n in (0, 1, 125, 126, 127, 65535, 65536, 70000):
        text = "x" * n
        raw = ws_encode_text(text)
        if n < 126:
            assert raw[1] == n and len(raw) == 2 + n
        elif n < 1 << 16:
            assert raw[1] == 126 and len(raw) == 4 + n
        else:
            assert raw[1] == 127 and len(raw) == 10 + n
        opcode, payload = ServerFrames(raw).parse_one()
        assert opcode == 0x1 and payload == text.encode()


def test_parser_round_trips_masked_frames():
    p = WsParser()
    doc = '{"type":"tap","t":1,"seq":2}'
    assert p.feed(mask_frame(doc.encode())) == [(0x1, doc.encode())]
    # several frames in one feed
    batch = mask_frame(b"a") + mask_frame(b"b", opcode=0x9) + mask_frame(b"c")
    assert p.feed(batch) == [(0x1, b"a"), (0x9, b"b"), (0x1, b"c")]
    # 16-bit and 64-bit length forms
    big = bytes(range(256)) * 300
    assert p.feed(mask_frame(big)) == [(0x1, big)]
    huge = b"z" * 70000
    assert p.feed(mask_frame(huge)) == [(0x1, huge)]


def test_parser_handles_byte_by_byte_delivery():
    p = WsParser()
    raw = mask_frame(b"hello")
    got = []
    for i in range(len(raw)):
        got.extend(p.feed(raw[i : i + 1]))
    assert got == [(0x1, b"hello")]


def test_parser_reassembles_fragments_and_passes_control_through():
    p = WsParser()
    assert p.feed(mask_frame(b"ab", fin=False)) == []
    # a ping inside the fragmented message is delivered immediately
    assert p.feed(mask_frame(b"p", opcode=0x9)) == [(0x9, b"p")]
    assert p.feed(mask_frame(b"cd", opcode=0x0, fin=False)) == []
    assert p.feed(mask_frame(b"ef", opcode=0x0, fin=True)) == [(0x1, b"abcdef")]


def test_parser_rejects_protocol_violations():
    with pytest.raises(ProtocolError):
        WsParser().feed(ws_encode_text("unmasked client frame"))
    with pytest.raises(ProtocolError):
        WsParser().feed(mask_frame(b"x", opcode=0x0))
    with pytest.raises(ProtocolError):
        WsParser().feed(mask_frame(b"x", opcode=0x9, fin=False))
    p = WsParser()
    p.feed(mask_frame(b"x", fin=False))
    with pytest.raises(ProtocolError):
        p.feed(mask_frame(b"y", opcode=0x1))
    raw = bytearray(mask_frame(b"x"))
    raw[0] |= 0x40
    with pytest.raises(ProtocolError):
        WsParser().feed(bytes(raw))


def test_default_live_world_has_a_static_display():
    server = SessionServer()
    assert server.marker_pos is None
    q = server.pose
    assert q is not None
    assert [(c.x, c.y) for c in q.corners] == [
        (160.0, 120.0),
        (480.0, 120.0),
        (480.0, 360.0),
        (160.0, 360.0),
    ]
    assert server.scenario.audio.threshold == 0.25


# -- live sessions ----------------------------------------------------

LIVE_DOC = json.dumps(
    {
        "duration_ms": 0,
        "frame": {"w": 160, "h": 120, "fps": 100},
        "display": {"pose": [[0, 20, 15, 140, 15, 140, 105, 20, 105]]},
    }
).encode()


def run(coro, timeout=90.0):
    return asyncio.run(asyncio.wait_for(coro, timeout))


async def started(doc: bytes = LIVE_DOC) -> SessionServer:
    server = SessionServer(parse_scenario(doc), port=0)
    await server.start()
    return server


class NdjsonClient:
    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer
        self.seq = -1
        self.seqs_seen: list[int] = []

    @classmethod
    async def connect(cls, port: int) -> "NdjsonClient":
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        client = cls(reader, writer)
        # the sniffer waits for first bytes, so open with a no-op
        await client.send("config")
        return client

    async def send(self, kind: str, **fields) -> None:
        self.seq += 1
        doc = {"type": kind, "t": 0.0, "seq": self.seq, **fields}
        self.writer.write(json.dumps(doc).encode() + b"\n")
        await self.writer.drain()

    async def next(self) -> dict:
        line = await self.reader.readline()
        if not line:
            raise ConnectionError("server closed")
        doc = json.loads(line)
        if doc["seq"] >= 0:
            self.seqs_seen.append(doc["seq"])
        return doc

    async def until(self, kind: str, limit: int = 3000) -> dict:
        for _ in range(limit):
            doc = await self.next()
            if doc["type"] == kind:
                return doc
        raise AssertionError(f"no {kind} message within {limit} messages")

    async def close(self) -> None:
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


def test_live_session_streams_moves_taps_and_snapshots():
    async def body():
        server = await started()
        client = await NdjsonClient.connect(server.port)
        try:
            snap = await client.until("snapshot")
            assert snap["mode"] == "edit"
            assert snap["layout"] == []
            assert [s["id"] for s in snap["palette"]] == ["play", "stop", "scroll", "screen"]
            assert snap["marker"] is None

            await client.send("marker_move", x=80.0, y=60.0)
            move = await client.until("move")
            assert abs(move["x"] - 80.0) <= 1.5 and abs(move["y"] - 60.0) <= 1.5

            snap = await client.until("snapshot")
            assert snap["marker"] is not None
            assert abs(snap["marker"][0] - 80.0) <= 1.5

            await client.send("tap")
            tap = await client.until("tap")
            assert tap["t"] >= 0.0

            assert client.seqs_seen == sorted(set(client.seqs_seen))
        finally:
            await client.close()
            await server.stop()

    run(body())


def test_second_client_is_refused_while_busy():
    async def body():
        server = await started()
        first = await NdjsonClient.connect(server.port)
        try:
            await first.until("snapshot")
            second = await NdjsonClient.connect(server.port)
            doc = await second.next()
            assert doc["type"] == "error" and doc["message"] == "busy"
            with pytest.raises(ConnectionError):
                await second.next()
            # the first client is unaffected
            await first.until("snapshot")
        finally:
            await first.close()
            await server.stop()

    run(body())


def test_malformed_message_gets_an_error_then_close():
    async def body():
        server = await started()
        reader, writer = await asyncio.open_connection("127.0.0.1", server.port)
        try:
            writer.write(b"this is not json\n")
            await writer.drain()
            saw_error = None
            for _ in range(200):
                line = await reader.readline()
                if not line:
                    break
                doc = json.loads(line)
                if doc["type"] == "error":
                    saw_error = doc
            assert saw_error is not None
            assert "JSON" in saw_error["message"]
        finally:
            writer.close()
            await server.stop()

    run(body())


def test_stale_client_seq_is_rejected():
    async def body():
        server = await started()
        client = await NdjsonClient.connect(server.port)
        try:
            await client.until("snapshot")
            client.seq = -1  # repeat seq 0
            await client.send("marker_move", x=30.0, y=30.0)
            doc = await client.until("error")
            assert "seq" in doc["message"]
            with pytest.raises(ConnectionError):
                await client.until("snapshot")
        finally:
            await client.close()
            await server.stop()

    run(body())


def test_pose_set_moves_the_detected_surface():
    async def body():
        server = await started()
        client = await NdjsonClient.connect(server.port)
        try:
            snap = await client.until("snapshot")
            want = [[35.0, 30.0], [150.0, 30.0], [150.0, 95.0], [35.0, 95.0]]
            await client.send("pose_set", corners=[v for c in want for v in c])
            for _ in range(400):
                snap = await client.until("snapshot")
                q = snap["quad"]
                if q is not None and all(
                    abs(gc[0] - wc[0]) <= 3 and abs(gc[1] - wc[1]) <= 3
                    for gc, wc in zip(q, want)
                ):
                    break
            else:
                raise AssertionError(f"surface never settled on the new pose: {snap['quad']}")
        finally:
            await client.close()
            await server.stop()

    run(body())


def test_config_threshold_gates_tap_detection():
    async def body():
        server = await started()
        client = await NdjsonClient.connect(server.port)
        try:
            await client.until("snapshot")
            await client.send("config", audio_threshold=0.95)
            await client.send("tap")
            # a tap burst peaks at 0.8, so nothing may fire at 0.95;
            # 60 frames at 100fps is far past the burst span
            for _ in range(60):
                doc = await client.until("snapshot")
                assert doc["type"] != "tap"
            await client.send("config", audio_threshold=0.2)
            await client.send("tap")
            await client.until("tap")
        finally:
            await client.close()
            await server.stop()

    run(body())


def test_websocket_upgrade_and_session():
    async def body():
        server = await started()
        reader, writer = await asyncio.open_connection("127.0.0.1", server.port)
        try:
            key = "dGhlIHNhbXBsZSBub25jZQ=="
            request = (
                "GET /session HTTP/1.1\r\n"
                "Host: localhost\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Key: {key}\r\n"
                "Sec-WebSocket-Version: 13\r\n\r\n"
            ).encode()
            hello = json.dumps(
                {"type": "marker_move", "t": 0, "seq": 0, "x": 80, "y": 60}
            ).encode()
            # first frame rides in the same segment as the handshake
            writer.write(request + mask_frame(hello))
            await writer.drain()

            head = b""
            while b"\r\n\r\n" not in head:
                data = await reader.read(1024)
                if not data:
                    raise ConnectionError("server closed during handshake")
                head += data
            head, _, tail = head.partition(b"\r\n\r\n")
            status = head.split(b"\r\n")[0]
            assert b"101" in status
            accept = None
            for line in head.split(b"\r\n")[1:]:
                name, _, value = line.partition(b":")
                if name.strip().lower() == b"sec-websocket-accept":
                    accept = value.strip().decode()
            assert accept == ws_accept_value(key)

            frames = ServerFrames(tail)
            seqs = []
            saw_move = None
            saw_pong = None
            writer.write(mask_frame(b"hi", opcode=0x9))
            await writer.drain()
            for _ in range(3000):
                opcode, payload = await frames.next(reader)
                if opcode == 0xA:
                    saw_pong = payload
                elif opcode == 0x1:
                    doc = json.loads(payload)
                    seqs.append(doc["seq"])
                    if doc["type"] == "move":
                        saw_move = doc
                if saw_move is not None and saw_pong is not None:
                    break
            assert saw_pong == b"hi"
            assert saw_move is not None
            assert abs(saw_move["x"] - 80.0) <= 1.5 and abs(saw_move["y"] - 60.0) <= 1.5
            assert seqs == sorted(set(seqs))
        finally:
            writer.close()
            await server.stop()

    run(body())
