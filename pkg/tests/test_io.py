import csv
import hashlib
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracburg import (
    Field,
    FieldFileError,
    GridSpec,
    KernelParams,
    ModelParams,
    eval_kernel,
    export_field_csv,
    export_radial_csv,
    load_field,
    loglog_slope,
    rquadrature,
    save_field,
    solve_profile,
)
from fracburg.io import HEADER, decode_field, encode_field, write_manifest

G8 = GridSpec(2, 8, 2.0)


@settings(max_examples=50, deadline=None)
@given(vals=arrays(np.float64, (8, 8), elements=st.floats(allow_nan=False, allow_infinity=False)),
       t=st.floats(allow_nan=False, allow_infinity=False))
def test_round_trip_bit_exact(vals, t):
    f = Field(G8, vals)
    g, head = decode_field(encode_field(f, 1.5, t, (1, 0)))
    assert g.values.tobytes() == f.values.tobytes()
    assert g.grid == f.grid
    assert head["t"] == t and head["alpha"] == 1.5 and head["deriv"] == (1, 0)


def test_header_is_32_bytes():
    assert HEADER.size == 32
    data = encode_field(Field(G8, np.zeros((8, 8))))
    assert data[:4] == b"FBF1"
    assert len(data) == 32 + 8 * 64 + 4


def test_complex_and_one_dimensional(tmp_path):
    g = GridSpec(1, 16, 3.0)
    f = Field(g, np.arange(16) * (1 + 2j))
    back, head = load_field(save_field(tmp_path / "c.fbf", f))
    assert head["kind"] == 1 and head["m"] == 1
    np.testing.assert_array_equal(back.values, f.values)
    assert math.isnan(head["alpha"])


def test_corruption_is_detected(tmp_path):
    p = save_field(tmp_path / "f.fbf", Field(G8, np.ones((8, 8))), 1.5, 1.0)
    data = bytearray(p.read_bytes())
    data[40] ^= 0x01
    with pytest.raises(FieldFileError, match="checksum"):
        decode_field(bytes(data))
    with pytest.raises(FieldFileError, match="magic"):
        decode_field(b"XXXX" + bytes(data[4:]))
    with pytest.raises(FieldFileError):
        decode_field(bytes(data[:20]))


def test_write_is_atomic(tmp_path):
    p = save_field(tmp_path / "sub" / "f.fbf", Field(G8, np.ones((8, 8))))
    assert p.exists()
    assert [q.name for q in p.parent.iterdir()] == ["f.fbf"]


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_radial_csv_constant_field(tmp_path):
    g = GridSpec(2, 64, 16.0)
    head, data = _read_csv(export_radial_csv(Field(g, np.full(g.shape, 2.5)), 6, tmp_path / "r.csv"))
    assert head == ["r", "mean", "min", "max", "count"]
    assert np.all(data[:, 1] == 2.5) and np.all(data[:, 2] == 2.5) and np.all(data[:, 3] == 2.5)


def test_radial_csv_kernel_decreases(tmp_path):
    g = GridSpec(2, 256, 32.0)
    k = eval_kernel(KernelParams(2, 1.5, 1.0), g).as_field()
    _, data = _read_csv(export_radial_csv(k, 16, tmp_path / "k.csv"))
    assert np.all(np.diff(data[1:, 1]) < 0)


def test_radial_csv_refit_matches_internal_slope(tmp_path):
    p = ModelParams()
    g = GridSpec(2, 256, 32.0)
    U = solve_profile(1e-6, p, g, rquadrature(24, p)).field
    edges = np.geomspace(2.0, 8.0, 9)
    head, data = _read_csv(export_radial_csv(U, edges, tmp_path / "u.csv", beta=p.beta))
    assert head[-1] == "envelope"
    refit = np.polyfit(np.log(data[:, 0]), np.log(data[:, 1]), 1)[0]
    assert refit == pytest.approx(loglog_slope(U, 2.0, 8.0, 8), abs=0.05)


def test_field_csv(tmp_path):
    g = GridSpec(2, 4, 1.0)
    f = Field(g, np.arange(16.0).reshape(4, 4) / 3)
    head, data = _read_csv(export_field_csv(f, tmp_path / "f.csv"))
    assert head == ["x1", "x2", "value"]
    assert data.shape == (16, 3)
    np.testing.assert_array_equal(data[:, 2], f.values.ravel())


def test_manifest_hashes(tmp_path):
    a = save_field(tmp_path / "a.fbf", Field(G8, np.ones((8, 8))))
    m = write_manifest(tmp_path / "manifest.json", {"x": np.float64(1.0)}, [a])
    doc = json.loads(m.read_text())
    assert doc["x"] == 1.0
    (entry,) = doc["files"]
    assert entry["path"] == "a.fbf"
    assert entry["sha256"] == hashlib.sha256(a.read_bytes()).hexdigest()
    assert entry["bytes"] == a.stat().st_size
