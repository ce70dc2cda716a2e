"""Command line entry points: run a scripted scenario, serve a live
session, or suggest marker thresholds from a sample frame."""
from __future__ import annotations

import argparse
import asyncio
import sys

import numpy as np

from .model import save_session
from .raster import read_ppm
from .segmentation import rgb_to_hsv
from .server import serve
from .session import run_scenario
from .world import ScenarioError, parse_scenario, with_seed


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        with open(args.scenario, "rb") as f:
            scenario = parse_scenario(f.read())
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    scenario = with_seed(scenario, args.seed)
    log, state = run_scenario(scenario, dump_frames=args.dump_frames)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(log)
    else:
        sys.stdout.write(log)
    if args.save_session:
        with open(args.save_session, "wb") as f:
            f.write(save_session(state))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    scenario = None
    if args.scenario:
        try:
            with open(args.scenario, "rb") as f:
                scenario = parse_scenario(f.read())
        except (OSError, ScenarioError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    try:
        asyncio.run(serve(scenario, args.host, args.port))
    except KeyboardInterrupt:
        pass
    return 0


def suggest_thresholds(hsv: np.ndarray) -> dict:
    """Pick an HSV window around the dominant colorful blob of a frame.

    Colorful means saturation and value both above 100; the hue window
    straddles the modal hue, the sat/val windows reach down a margin
    below the 5th percentile of the selected pixels."""
    h = hsv[:, :, 0].astype(np.int32)
    s = hsv[:, :, 1].astype(np.int32)
    v = hsv[:, :, 2].astype(np.int32)
    colorful = (s > 100) & (v > 100)
    if not colorful.any():
        raise ValueError("no saturated bright pixels found")
    hues = h[colorful]
    hist = np.bincount(hues, minlength=256)
    mode = int(np.argmax(hist))
    # keep hues within +/-12 of the mode (wrapped) when picking margins
    dist = np.minimum((hues - mode) % 256, (mode - hues) % 256)
    picked = dist <= 12
    sat_lo = max(int(np.percentile(s[colorful][picked], 5)) - 30, 1)
    val_lo = max(int(np.percentile(v[colorful][picked], 5)) - 30, 1)
    return {
        "hue": [(mode - 10) % 256, (mode + 10) % 256],
        "sat": [sat_lo, 255],
        "val": [val_lo, 255],
    }


def _cmd_calibrate(args: argparse.Namespace) -> int:
    try:
        with open(args.image, "rb") as f:
            img = read_ppm(f.read())
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        window = suggest_thresholds(rgb_to_hsv(img).pixels)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    import json

    print(json.dumps(window, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vip", description="desk prototyping simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scripted scenario end to end")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--seed", type=int, default=None, help="noise seed override")
    run.add_argument("--out", default=None, help="write JSONL events here (default stdout)")
    run.add_argument("--dump-frames", default=None, metavar="DIR", help="dump PPM frames")
    run.add_argument("--save-session", default=None, metavar="FILE", help="write final session JSON")
    run.set_defaults(func=_cmd_run)

    srv = sub.add_parser("serve", help="serve a live session over TCP/WebSocket")
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--scenario", default=None, help="scenario JSON for world defaults")
    srv.set_defaults(func=_cmd_serve)

    cal = sub.add_parser("calibrate", help="suggest marker thresholds from a PPM frame")
    cal.add_argument("--image", required=True, help="sample frame (binary PPM)")
    cal.set_defaults(func=_cmd_calibrate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
