import json
from pathlib import Path

from vipsim import parse_scenario, render_world
from vipsim.cli import main, suggest_thresholds
from vipsim.raster import write_ppm
from vipsim.segmentation import HsvThresholds, rgb_to_hsv

DATA = Path(__file__).parent / "data"


def test_run_writes_the_golden_log_and_session(tmp_path):
    out = tmp_path / "events.jsonl"
    sess = tmp_path / "session.json"
    code = main([
        "run",
        str(DATA / "golden_scenario.json"),
        "--out",
        str(out),
        "--save-session",
        str(sess),
    ])
    assert code == 0
    assert out.read_bytes() == (DATA / "golden_events.jsonl").read_bytes()
    assert sess.read_bytes() == (DATA / "golden_session.json").read_bytes()


def test_run_prints_to_stdout_by_default(tmp_path, capsys):
    doc = {"duration_ms": 100, "marker": {"path": [[0, 50, 50]]}}
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc))
    assert main(["run", str(path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and json.loads(lines[0])["type"] == "move"


def test_run_seed_override_changes_the_noise(tmp_path, capsys):
    doc = {
        "duration_ms": 100,
        "seed": 1,
        "noise": {"luminance_sigma": 12.0},
        "marker": {"path": [[0, 50, 50]]},
    }
    path = tmp_path / "noisy.json"
    path.write_text(json.dumps(doc))
    assert main(["run", str(path)]) == 0
    base = capsys.readouterr().out
    assert main(["run", str(path), "--seed", "1"]) == 0
    same = capsys.readouterr().out
    assert same == base


def test_run_reports_bad_scenarios(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["run", str(missing)]) == 2
    assert "error:" in capsys.readouterr().err

    bad = tmp_path / "bad.json"
    bad.write_text('{"frame": {}}')
    assert main(["run", str(bad)]) == 2
    assert "duration" in capsys.readouterr().err


def test_run_dump_frames(tmp_path):
    doc = {"duration_ms": 50, "frame": {"w": 64, "h": 48, "fps": 30}}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    frames = tmp_path / "frames"
    assert main(["run", str(path), "--dump-frames", str(frames)]) == 0
    assert (frames / "world_0000.ppm").exists()
    assert (frames / "overlay_0001.ppm").exists()


def test_calibrate_recovers_the_marker_hue(tmp_path, capsys):
    sc = parse_scenario(
        json.dumps(
            {
                "duration_ms": 100,
                "marker": {"path": [[0, 320, 240]]},
            }
        ).encode()
    )
    frame = render_world(sc.world, 0.0)
    img = tmp_path / "frame.ppm"
    img.write_bytes(write_ppm(frame))
    assert main(["calibrate", "--image", str(img)]) == 0
    window = json.loads(capsys.readouterr().out)
    assert set(window) == {"hue", "sat", "val"}
    lo, hi = window["hue"]
    # the default marker hue is 170; the window must contain it
    t = HsvThresholds(lo, hi, window["sat"][0], 255, window["val"][0], 255)
    assert t.contains(170, 200, 220)
    # and segmenting with the suggestion finds the marker blob
    mask = rgb_to_hsv(frame).pixels
    h, s, v = mask[240, 320]
    assert t.contains(int(h), int(s), int(v))


def test_calibrate_rejects_a_dull_frame(tmp_path, capsys):
    sc = parse_scenario(b'{"duration_ms": 100}')
    frame = render_world(sc.world, 0.0)
    img = tmp_path / "gray.ppm"
    img.write_bytes(write_ppm(frame))
    assert main(["calibrate", "--image", str(img)]) == 1
    assert "error:" in capsys.readouterr().err


def test_calibrate_rejects_a_missing_file(tmp_path, capsys):
    assert main(["calibrate", "--image", str(tmp_path / "none.ppm")]) == 2
    assert "error:" in capsys.readouterr().err


def test_threshold_suggestion_handles_hue_wraparound():
    import numpy as np

    hsv = np.zeros((20, 20, 3), dtype=np.uint8)
    hsv[:, :, 0] = 2  # just past the wrap point
    hsv[5:15, 5:15, 1] = 200
    hsv[5:15, 5:15, 2] = 220
    window = suggest_thresholds(hsv)
    lo, hi = window["hue"]
    assert lo == (2 - 10) % 256 and hi == 12
    assert lo > hi  # wrapped window
