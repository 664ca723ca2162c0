import csv
import json
import subprocess
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

SMALL = ["--size", "32", "--set", "update_iters=100"]


def run(exe, *args, cwd=None):
    return subprocess.run([exe, *map(str, args)], capture_output=True, text=True, cwd=cwd, timeout=300)


@pytest.fixture(scope="module")
def demo(exe, tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    r = run(exe, "demo", *SMALL, "--out", out)
    assert r.returncode == 0, r.stderr
    return out


def test_demo_layout(demo):
    for name in ["scene.txt", "training_cameras.txt", "trajectory.txt", "condition.png", "edited_scene.txt",
                 "manifest.json", "summary.json"]:
        assert (demo / name).is_file(), name
    for sub in ["source", "edited", "updated"]:
        assert len(list((demo / sub).glob("frame_*.png"))) == 25
    summary = json.loads((demo / "summary.json").read_text())
    assert summary["counters"]["invert_count"] == 1
    assert summary["counters"]["sample_count"] == 1
    assert 0 <= summary["condition_index"] < 25


def test_demo_is_deterministic(exe, demo, tmp_path):
    r = run(exe, "demo", *SMALL, "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    for f in sorted(demo.rglob("*")):
        if f.is_dir():
            continue
        other = tmp_path / f.relative_to(demo)
        if f.name == "summary.json":
            a, b = json.loads(f.read_text()), json.loads(other.read_text())
            a.pop("timings_ms")
            b.pop("timings_ms")
            assert a == b
        else:
            assert f.read_bytes() == other.read_bytes(), f.name


def test_render_outputs(exe, demo, tmp_path):
    r = run(exe, "render", "--scene", demo / "scene.txt", "--cameras", demo / "trajectory.txt", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["frames"]) == 25
    assert (tmp_path / "frame_000.png").is_file()
    assert (tmp_path / "depth_024.bin").stat().st_size == 32 * 32 * 4
    assert (tmp_path / "cameras.txt").is_file()
    # Scene files keep 9 significant digits, so a color may round to the neighbouring level.
    ours = np.asarray(Image.open(tmp_path / "frame_007.png"), dtype=int)
    theirs = np.asarray(Image.open(demo / "source" / "frame_007.png"), dtype=int)
    assert np.abs(ours - theirs).max() <= 1


def test_missing_scene_is_an_argument_error(exe, demo, tmp_path):
    missing = tmp_path / "absent.txt"
    r = run(exe, "render", "--scene", missing, "--cameras", demo / "trajectory.txt", "--out", tmp_path / "o")
    assert r.returncode == 2
    assert str(missing) in r.stderr


def test_single_camera_trajectory(exe, demo, tmp_path):
    lines = (demo / "training_cameras.txt").read_text().splitlines()
    one = tmp_path / "one.txt"
    one.write_text(next(l for l in lines if l and not l.startswith("#")) + "\n")
    r = run(exe, "trajectory", "--cameras", one, "--frames", "5", "--radius", "10", "--out", tmp_path / "t")
    assert r.returncode == 2
    assert "trajectory too short" in r.stderr


def test_trajectory_command(exe, demo, tmp_path):
    r = run(exe, "trajectory", "--cameras", demo / "training_cameras.txt", "--keys", "3", "--frames", "12",
            "--scene", demo / "scene.txt", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    header = (tmp_path / "trajectory.txt").read_text().splitlines()[0]
    assert header.startswith("trajectory v1 12 keys:0,")
    assert header.endswith(",11")


def test_eta_out_of_range(exe, demo, tmp_path):
    r = run(exe, "edit", "--scene", demo / "scene.txt", "--trajectory", demo / "trajectory.txt", "--set", "eta=1.2",
            "--out", tmp_path)
    assert r.returncode == 2
    assert "eta out of range" in r.stderr


def test_unknown_config_key(exe, demo, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("eta = 0.2\ncolour = red\n")
    r = run(exe, "edit", "--scene", demo / "scene.txt", "--trajectory", demo / "trajectory.txt", "--config", cfg,
            "--out", tmp_path / "o")
    assert r.returncode == 2
    assert "colour" in r.stderr


def test_eval_identical(exe, demo, tmp_path):
    r = run(exe, "eval", "--gt", demo / "trajectory.txt", "--est", demo / "trajectory.txt", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    result = json.loads(r.stdout)
    assert result["trans_err"] == 0.0
    assert json.loads((tmp_path / "eval.json").read_text()) == result


def test_eval_frames(exe, demo, tmp_path):
    render_dir = tmp_path / "r"
    assert run(exe, "render", "--scene", demo / "scene.txt", "--cameras", demo / "trajectory.txt",
               "--out", render_dir).returncode == 0
    r = run(exe, "eval", "--frames", render_dir, "--cameras", render_dir / "cameras.txt")
    assert r.returncode == 0, r.stderr
    assert 0.0 <= json.loads(r.stdout)["reprojection_consistency"] < 0.05


def test_sweep(exe, demo, tmp_path):
    r = run(exe, "sweep", "--scene", demo / "scene.txt", "--trajectory", demo / "trajectory.txt", "--seeds", "2",
            "--set", "denoiser=static", "--set", "sigma_data=0.005", "--set", "factor=4", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    with open(tmp_path / "sweep.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 10
    assert list(rows[0].keys()) == ["eta", "seed", "pose_err", "appearance_dist"]
    means = {}
    for row in rows:
        means.setdefault(float(row["eta"]), []).append(float(row["appearance_dist"]))
    values = [sum(v) / len(v) for _, v in sorted(means.items())]
    assert values == sorted(values)
    assert (tmp_path / "sweep.png").is_file()


def test_bad_subcommand(exe):
    r = run(exe, "paint")
    assert r.returncode == 2
