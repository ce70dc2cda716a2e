"""Record a live session for the workbench replay tests.

Starts `vip serve`, drives it over plain TCP with the same marker
choreography the golden scenario uses (select, place, drag, resize,
wipe, click), and writes every server document verbatim to
tests/data/recorded_session.jsonl.

Pacing is keyed to the server's own snapshot clock, not wall time: the
next marker sample or tap goes out when the snapshot stream reaches its
timestamp, so the recording is stable against host speed.
"""

import json
import socket
import subprocess
import sys
import time
from pathlib import Path

HERE = Path(__file__).resolve().parent
OUT = HERE.parent / "tests" / "data" / "recorded_session.jsonl"

POSE = [140, 60, 500, 60, 500, 420, 140, 420]
PATH = [
    (0, 600, 60),
    (100, 600, 60),
    (400, 167, 105),
    (700, 167, 105),
    (950, 320, 168),
    (1450, 320, 168),
    (1850, 356, 222),
    (2150, 356, 222),
    (2250, 321, 200),
    (2350, 321, 200),
    (2750, 284, 182),
    (3050, 284, 182),
    (3150, 230, 348),
    (3250, 230, 348),
    (3600, 428, 348),
    (3700, 428, 348),
    (3950, 352, 215),
    (4500, 352, 215),
]
TAPS = [500, 1000, 1400, 2300, 3200, 4000]
END_MS = 4500.0
FRAME_MS = 1000.0 / 30.0


def sample_path(t: float) -> tuple[float, float]:
    if t <= PATH[0][0]:
        return PATH[0][1], PATH[0][2]
    for (t0, x0, y0), (t1, x1, y1) in zip(PATH, PATH[1:]):
        if t0 <= t <= t1:
            f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            return x0 + f * (x1 - x0), y0 + f * (y1 - y0)
    return PATH[-1][1], PATH[-1][2]


def main() -> int:
    port = 8973
    proc = subprocess.Popen(
        [sys.executable, "-m", "vipsim.cli", "serve", "--port", str(port)],
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
    )
    try:
        assert proc.stdout is not None
        proc.stdout.readline()  # wait for "listening on ..."
        sock = socket.create_connection(("127.0.0.1", port), timeout=30)
        f = sock.makefile("rwb")
        seq = 0

        def send(doc: dict) -> None:
            nonlocal seq
            doc = {**doc, "t": time.time() * 1000.0, "seq": seq}
            seq += 1
            f.write(json.dumps(doc).encode() + b"\n")
            f.flush()

        send({"type": "config"})
        send({"type": "pose_set", "corners": POSE})

        lines: list[str] = []
        tap_idx = 0
        while True:
            raw = f.readline()
            if not raw:
                break
            lines.append(raw.decode().rstrip("\n"))
            doc = json.loads(raw)
            if doc.get("type") != "snapshot":
                continue
            t = float(doc["t"])
            if t >= END_MS:
                break
            # position the marker for the frame about to be rendered
            x, y = sample_path(t + FRAME_MS)
            send({"type": "marker_move", "x": round(x, 2), "y": round(y, 2)})
            while tap_idx < len(TAPS) and t >= TAPS[tap_idx] - FRAME_MS:
                send({"type": "tap"})
                tap_idx += 1
        sock.close()
    finally:
        proc.terminate()
        proc.wait(timeout=10)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n")

    docs = [json.loads(l) for l in lines]
    kinds: dict[str, int] = {}
    for d in docs:
        kinds[d["type"]] = kinds.get(d["type"], 0) + 1
    snaps = [d for d in docs if d["type"] == "snapshot"]
    modes = [s["mode"] for s in snaps]
    gestures = [d.get("kind") for d in docs if d["type"] == "gesture"]
    print("docs:", kinds)
    print("modes seen:", sorted(set(modes)))
    print("max layout:", max(len(s["layout"]) for s in snaps))
    print("gesture kinds:", sorted(set(str(g) for g in gestures)))
    print("wrote", OUT, len(lines), "lines")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
