import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fracburg import load_field
from fracburg.cli import main

SMALL = """\
alpha = 1.5
beta = 1.5
grid.N = 64
grid.L = 16
n_trunc = 4
steps = 32
save_every = 8
profile.nodes = 16
"""


def _cfg(tmp_path, text=SMALL, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text + f"out_dir = {tmp_path / 'out'}\n", encoding="utf-8")
    return p


def _manifest(path):
    return json.loads(Path(path).read_text())


def test_kernel_command(tmp_path, monkeypatch):
    monkeypatch.delenv("OUT_DIR", raising=False)
    cfg = _cfg(tmp_path)
    assert main(["kernel", "--config", str(cfg), "--t", "2", "--csv"]) == 0
    m = _manifest(tmp_path / "out/kernel/manifest.json")
    assert {f["path"] for f in m["files"]} == {"kernel.fbf", "kernel.csv"}
    assert m["version"] and len(m["config_hash"]) == 64 and m["wall_time"] >= 0
    f, head = load_field(tmp_path / "out/kernel/kernel.fbf")
    assert head["t"] == 2.0 and f.mass() == pytest.approx(1.0)


def test_solve_command_writes_one_file_per_saved_time(tmp_path, monkeypatch):
    monkeypatch.delenv("OUT_DIR", raising=False)
    assert main(["solve", "--config", str(_cfg(tmp_path)), "--richardson"]) == 0
    m = _manifest(tmp_path / "out/solve/manifest.json")
    assert m["times"] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(m["files"]) == 5
    assert set(m["diagnostics"]) >= {"sup", "mass", "L2", "max_step_growth"}
    assert m["params"]["alpha"] == 1.5
    assert 3.5 <= m["richardson"]["ratio"] <= 4.5


def test_richardson_ratio_from_separate_runs(tmp_path, monkeypatch):
    monkeypatch.delenv("OUT_DIR", raising=False)
    finals = []
    for steps in (16, 32, 64):
        text = SMALL.replace("steps = 32", f"steps = {steps}").replace("save_every = 8", f"save_every = {steps}")
        cfg = tmp_path / f"s{steps}.cfg"
        cfg.write_text(text + f"out_dir = {tmp_path / str(steps)}\n")
        assert main(["solve", "--config", str(cfg)]) == 0
        m = _manifest(tmp_path / str(steps) / "solve/manifest.json")
        finals.append(load_field(tmp_path / str(steps) / "solve" / m["files"][-1]["path"])[0].values)
    ratio = np.abs(finals[0] - finals[1]).max() / np.abs(finals[1] - finals[2]).max()
    assert 3.5 <= ratio <= 4.5


def test_profile_is_deterministic(tmp_path, monkeypatch):
    monkeypatch.delenv("OUT_DIR", raising=False)
    cfg = _cfg(tmp_path)
    assert main(["profile", "--config", str(cfg), "--bins", "6"]) == 0
    first = (tmp_path / "out/profile/U.fbf").read_bytes()
    m = _manifest(tmp_path / "out/profile/manifest.json")
    assert m["residual"] > 0 and m["sup_delta"] and m["iterations"] == len(m["sup_delta"])
    assert main(["profile", "--config", str(cfg), "--bins", "6"]) == 0
    assert (tmp_path / "out/profile/U.fbf").read_bytes() == first
    head = (tmp_path / "out/profile/radial.csv").read_text().splitlines()[0]
    assert head == "r,mean,min,max,count,envelope"


def test_every_output_listed_in_exactly_one_manifest(tmp_path, monkeypatch):
    monkeypatch.delenv("OUT_DIR", raising=False)
    cfg = str(_cfg(tmp_path))
    for cmd in (["kernel"], ["solve"], ["verify", "--suite", "kernel.normalization"]):
        assert main(cmd + ["--config", cfg]) == 0
    out = tmp_path / "out"
    manifests = [p for p in out.rglob("*.json") if p.name.endswith("manifest.json")]
    listed = []
    for mp in manifests:
        listed += [(mp.parent / f["path"]).resolve() for f in _manifest(mp)["files"]]
    outputs = [p.resolve() for p in out.rglob("*") if p.is_file() and p not in manifests]
    assert sorted(listed) == sorted(outputs)


def test_verify_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("OUT_DIR", raising=False)
    ok = _cfg(tmp_path, "alpha = 1.5\nbeta = 1.5\n")
    report = tmp_path / "report.json"
    assert main(["verify", "--suite", "kernel.*", "--config", str(ok), "--out", str(report)]) == 0
    assert json.loads(report.read_text())["passed"] is True
    bad = _cfg(tmp_path, SMALL + "thresholds.kernel.normalization = 0\n", "bad.cfg")
    assert main(["verify", "--suite", "kernel.normalization", "--config", str(bad), "--out", str(report)]) == 1
    err = capsys.readouterr().err
    assert "kernel.normalization" in err and "total mass 1" in err


def test_too_many_radial_bins_is_a_usage_error(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("OUT_DIR", raising=False)
    assert main(["profile", "--config", str(_cfg(tmp_path)), "--bins", "64"]) == 2
    assert "empty shell" in capsys.readouterr().err


def test_config_errors_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("alpha = 2.5\nbeta = 1.5\n")
    assert main(["kernel", "--config", str(p)]) == 2
    assert "alpha" in capsys.readouterr().err
    assert main(["kernel", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_out_dir_environment_override(tmp_path, monkeypatch):
    monkeypatch.setenv("OUT_DIR", str(tmp_path / "env"))
    assert main(["kernel", "--config", str(_cfg(tmp_path))]) == 0
    assert (tmp_path / "env/kernel/manifest.json").exists()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "fracburg", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "fracburg" in out.stdout
