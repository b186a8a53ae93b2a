import hashlib
import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from waverom_plots.cli import main, render
from waverom_plots.reader import ArtifactError, read_artifact

MAGIC = b"WVRM1\n"


def write_artifact(path, array, header):
    """Write the documented format directly (no dependency on the producer)."""
    array = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    head = dict(header)
    head["shape"] = list(array.shape)
    blob = json.dumps(head, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(blob).to_bytes(8, "little"))
        f.write(blob)
        f.write(array.tobytes())
    return path


GRID = {"x0": 1.0, "z0": 1.5, "dx": 0.25, "dz": 0.125, "nx": 40, "nz": 48}


def fake_image(path, kind, seed, config="cafe0123"):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((GRID["nx"], GRID["nz"]))
    if kind == "norm":
        vals = vals**2
    return write_artifact(path, vals, {
        "kind": kind, "grid": GRID,
        "params": {"tau": 0.2, "m": 49, "aperture": 30.0, "noise": 0.0},
        "config": config})


def fake_data_tensor(path, seed, config="cafe0123"):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((24, 9, 9))
    return write_artifact(path, D, {"kind": "data_tensor", "tau": 0.2,
                                    "n": 12, "m": 9, "config": config})


def fake_manifest(path, config="cafe0123"):
    manifest = {
        "config_hash": config,
        "config": {"array": {"m": 9, "aperture": 6.0}},
        "medium": {"width": 12.0, "depth": 8.0, "h": 0.125,
                   "reflectors": [
                       {"kind": "rect", "x0": 4.0, "z0": 3.9, "x1": 8.0,
                        "z1": 4.1, "speed": 0.5, "thickness": 0.25},
                       {"kind": "segment", "x0": 5.0, "z0": 5.5, "x1": 7.0,
                        "z1": 6.0, "speed": 0.5, "thickness": 0.25}]},
        "artifacts": {},
    }
    Path(path).write_text(json.dumps(manifest))
    return path


@pytest.fixture()
def run_dir(tmp_path):
    d = tmp_path / "run"
    d.mkdir()
    fake_image(d / "image_norm.wrm", "norm", 1)
    fake_image(d / "image_bp.wrm", "bp", 2)
    fake_image(d / "image_rtm.wrm", "rtm", 3)
    fake_image(d / "image_ps.wrm", "ps", 4)
    fake_data_tensor(d / "data_true.wrm", 5)
    fake_data_tensor(d / "data_ref.wrm", 6)
    fake_manifest(d / "manifest.json")
    return d


def test_four_method_comparison_grid(run_dir, tmp_path):
    spec = {"kind": "image_grid",
            "inputs": [str(run_dir / f"image_{m}.wrm")
                       for m in ("norm", "bp", "rtm", "ps")],
            "manifest": str(run_dir / "manifest.json"),
            "out": str(tmp_path / "grid.png")}
    out = render(spec)
    assert out.exists() and out.stat().st_size > 10000


def test_gather_triptych(run_dir, tmp_path):
    spec = {"kind": "gather_triptych",
            "inputs": [str(run_dir / "data_true.wrm"),
                       str(run_dir / "data_ref.wrm")],
            "out": str(tmp_path / "gather.png")}
    out = render(spec)
    assert out.exists() and out.stat().st_size > 10000


def test_medium_layout(run_dir, tmp_path):
    spec = {"kind": "medium_layout",
            "manifest": str(run_dir / "manifest.json"),
            "out": str(tmp_path / "layout.png")}
    assert render(spec).exists()


def test_render_is_deterministic(run_dir, tmp_path):
    spec = {"kind": "image_grid",
            "inputs": [str(run_dir / "image_norm.wrm"),
                       str(run_dir / "image_bp.wrm")],
            "manifest": str(run_dir / "manifest.json"),
            "out": str(tmp_path / "a.png")}
    render(spec)
    h1 = hashlib.sha256((tmp_path / "a.png").read_bytes()).hexdigest()
    spec["out"] = str(tmp_path / "b.png")
    render(spec)
    h2 = hashlib.sha256((tmp_path / "b.png").read_bytes()).hexdigest()
    assert h1 == h2


def test_rendering_is_read_only(run_dir, tmp_path):
    before = {p.name: p.read_bytes() for p in run_dir.iterdir()}
    render({"kind": "image_grid",
            "inputs": [str(run_dir / "image_norm.wrm")],
            "out": str(tmp_path / "x.png")})
    after = {p.name: p.read_bytes() for p in run_dir.iterdir()}
    assert before == after


def test_missing_input_rejected(tmp_path):
    with pytest.raises(ArtifactError):
        render({"kind": "image_grid", "inputs": [str(tmp_path / "nope.wrm")],
                "out": str(tmp_path / "x.png")})


def test_mismatched_runs_rejected(run_dir, tmp_path):
    other = fake_image(tmp_path / "foreign.wrm", "norm", 9,
                       config="deadbeef")
    with pytest.raises(ArtifactError):
        render({"kind": "image_grid",
                "inputs": [str(run_dir / "image_norm.wrm"), str(other)],
                "out": str(tmp_path / "x.png")})


def test_empty_image_rejected(tmp_path):
    vals = np.full((GRID["nx"], GRID["nz"]), np.nan)
    p = write_artifact(tmp_path / "empty.wrm", vals,
                       {"kind": "ps", "grid": GRID, "params": {}})
    with pytest.raises(ArtifactError):
        render({"kind": "image_grid", "inputs": [str(p)],
                "out": str(tmp_path / "x.png")})


def test_non_image_rejected_in_grid(run_dir, tmp_path):
    with pytest.raises(ArtifactError):
        render({"kind": "image_grid",
                "inputs": [str(run_dir / "data_true.wrm")],
                "out": str(tmp_path / "x.png")})


def test_cli_render(run_dir, tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "gather_triptych",
        "inputs": [str(run_dir / "data_true.wrm"),
                   str(run_dir / "data_ref.wrm")],
        "out": str(tmp_path / "fig.png")}))
    assert main(["render", str(spec_path)]) == 0
    assert (tmp_path / "fig.png").exists()


def test_cli_bad_spec(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"kind": "bogus", "out": "x.png"}))
    assert main(["render", str(spec_path)]) == 2


def test_sweep_grid(run_dir, tmp_path):
    d2 = tmp_path / "run2"
    shutil.copytree(run_dir, d2)
    spec = {"kind": "sweep_grid", "inputs": [str(run_dir), str(d2)],
            "method": "norm", "out": str(tmp_path / "sweep.png")}
    assert render(spec).exists()


@pytest.mark.skipif(shutil.which("waverom") is None,
                    reason="primary CLI not installed")
def test_end_to_end_with_primary_cli(tmp_path):
    """Full interface check: pipeline run through the external CLI only."""
    cfg = {
        "scenario": "waveguide", "mesh": 8,
        "array": {"m": 5, "aperture": 5.0},
        "sampling": {"tau_factor": 0.5, "n": 8},
        "imaging": {"x": [13.0, 19.0], "z": [1.5, 4.0], "stride": [2, 2]},
        "methods": ["norm", "bp"],
        "reflectors": [{"kind": "rect", "x0": 14.0, "z0": 2.4, "x1": 18.0,
                        "z1": 2.65, "speed": 0.5, "thickness": 0.25}],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    run = tmp_path / "run"
    proc = subprocess.run(["waverom", "run", "--config", str(cfg_path),
                           "--out", str(run)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    spec = {"kind": "image_grid",
            "inputs": [str(run / "image_norm.wrm"),
                       str(run / "image_bp.wrm")],
            "manifest": str(run / "manifest.json"),
            "out": str(tmp_path / "fig.png")}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["render", str(spec_path)]) == 0
    assert (tmp_path / "fig.png").stat().st_size > 10000
