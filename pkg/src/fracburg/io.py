"""Binary field files, CSV export and run manifests.

Field file layout (little endian)::

    0   4s  magic b"FBF1"
    4   B   format version
    5   B   (m << 4) | kind        kind 0 = real, 1 = complex
    6   B   log2 N                 points per axis
    7   B   (k1 << 4) | k2         derivative multi-index (0 for plain fields)
    8   d   L
    16  d   alpha                  NaN when not applicable
    24  d   t                      NaN when not applicable
    32      payload, float64 row major (complex as interleaved re, im)
    end I   CRC32 of header and payload

All writes go to a temporary file in the target directory and are renamed
into place.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import struct
import tempfile
import zlib
from io import StringIO
from pathlib import Path

import numpy as np

from .grid import Field, GridSpec
from .radial import shell_stats

__all__ = [
    "FieldFileError",
    "save_field",
    "load_field",
    "export_radial_csv",
    "export_field_csv",
    "atomic_write_bytes",
    "write_manifest",
    "sha256_file",
]

MAGIC = b"FBF1"
VERSION = 1
HEADER = struct.Struct("<4sBBBBddd")
TRAILER = struct.Struct("<I")


class FieldFileError(ValueError):
    pass


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def encode_field(f: Field, alpha: float = math.nan, t: float = math.nan, deriv=(0, 0)) -> bytes:
    g = f.grid
    kind = 1 if f.is_complex else 0
    if g.m > 15:
        raise FieldFileError("dimension does not fit the header")
    k = tuple(deriv) + (0,) * (2 - len(deriv))
    if any(not 0 <= v <= 15 for v in k[:2]) or any(v for v in k[2:]):
        raise FieldFileError(f"derivative index {deriv} does not fit the header")
    head = HEADER.pack(MAGIC, VERSION, (g.m << 4) | kind, int(math.log2(g.N)), (k[0] << 4) | k[1], g.L, alpha, t)
    vals = f.values
    if kind:
        vals = np.stack([vals.real, vals.imag], axis=-1)
    payload = np.ascontiguousarray(vals, dtype="<f8").tobytes()
    body = head + payload
    return body + TRAILER.pack(zlib.crc32(body))


def save_field(path, f: Field, alpha: float = math.nan, t: float = math.nan, deriv=(0, 0)) -> Path:
    return atomic_write_bytes(path, encode_field(f, alpha, t, deriv))


def decode_field(data: bytes) -> tuple[Field, dict]:
    if len(data) < HEADER.size + TRAILER.size:
        raise FieldFileError("file too short")
    magic, ver, mk, logn, kk, L, alpha, t = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFileError(f"bad magic {magic!r}")
    if ver != VERSION:
        raise FieldFileError(f"unsupported version {ver}")
    (crc,) = TRAILER.unpack_from(data, len(data) - TRAILER.size)
    if zlib.crc32(data[: -TRAILER.size]) != crc:
        raise FieldFileError("checksum mismatch")
    m, kind = mk >> 4, mk & 0xF
    if kind not in (0, 1):
        raise FieldFileError(f"unknown value kind {kind}")
    N = 1 << logn
    n_vals = N**m * (2 if kind else 1)
    payload = data[HEADER.size : -TRAILER.size]
    if len(payload) != 8 * n_vals:
        raise FieldFileError(f"payload holds {len(payload)} bytes, expected {8 * n_vals}")
    vals = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if kind:
        vals = vals.reshape(-1, 2)
        vals = vals[:, 0] + 1j * vals[:, 1]
    grid = GridSpec(m, N, L)
    header = {"m": m, "N": N, "L": L, "alpha": alpha, "t": t, "deriv": (kk >> 4, kk & 0xF), "kind": kind}
    return Field(grid, vals.reshape(grid.shape)), header


def load_field(path) -> tuple[Field, dict]:
    return decode_field(Path(path).read_bytes())


def export_radial_csv(f: Field, bins, path, beta: float | None = None, r_max: float | None = None) -> Path:
    """Shell statistics ``r, mean, min, max, count`` (plus ``envelope`` when ``beta`` is given).

    ``bins`` is a shell count (equal widths on ``[0, r_max]``) or an array of edges.
    """
    g = f.grid
    if np.ndim(bins) == 0:
        if int(bins) < 1:
            raise ValueError("bins must be >= 1")
        edges = np.linspace(0.0, g.trust_radius if r_max is None else r_max, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    s = shell_stats(f.values, g.radius, edges)
    cols = ["r", "mean", "min", "max", "count"]
    rows = [s.r, s.mean, s.min, s.max, s.count]
    if beta is not None:
        cols.append("envelope")
        rows.append(s.mean * (1 + s.r) ** beta)
    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i in range(len(s.r)):
        w.writerow([int(r[i]) if c == "count" else f"{r[i]:.17g}" for c, r in zip(cols, rows)])
    return atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


def export_field_csv(f: Field, path) -> Path:
    """Coordinates ``x1, ..., xm`` and ``value`` for every grid point (row-major order)."""
    g = f.grid
    cols = [f"x{i + 1}" for i in range(g.m)] + ["value"]
    data = [c.ravel() for c in g.coords] + [f.values.ravel()]
    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in zip(*data):
        w.writerow([f"{v:.17g}" for v in row])
    return atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_manifest(path, payload: dict, files: list) -> Path:
    """Write ``payload`` plus a ``files`` list with sha256 hashes of every output."""
    path = Path(path)
    entries = []
    for fp in files:
        fp = Path(fp)
        rel = os.path.relpath(fp, path.parent)
        entries.append({"path": rel, "sha256": sha256_file(fp), "bytes": fp.stat().st_size})
    doc = {**payload, "files": entries}
    text = json.dumps(doc, indent=2, sort_keys=True, default=_jsonable, allow_nan=True)
    return atomic_write_bytes(path, (text + "\n").encode("utf-8"))
