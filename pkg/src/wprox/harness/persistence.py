"""Binary container for particle clouds plus a text metadata sidecar.

Layout: 4 magic bytes, uint32 version, uint64 m, uint64 d (all
little-endian), then m*d float64 values row-major little-endian. The sidecar
`<path>.meta.txt` holds sorted `key = value` lines (seeds, config hash, and
whatever else the producer wants to record).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..measures import ParticleCloud

MAGIC = b"WPXC"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def save_cloud(cloud: ParticleCloud, path, metadata: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, cloud.m, cloud.d))
        fh.write(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())
    if metadata is not None:
        lines = [f"{k} = {metadata[k]}" for k in sorted(metadata)]
        Path(f"{path}.meta.txt").write_text("\n".join(lines) + "\n")


def load_cloud(path) -> ParticleCloud:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated cloud file")
    magic, version, m, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * m * d
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    pts = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(m, d)
    return ParticleCloud(pts)


def load_metadata(path) -> dict:
    meta_path = Path(f"{path}.meta.txt")
    out = {}
    if meta_path.exists():
        for line in meta_path.read_text().splitlines():
            if " = " in line:
                key, val = line.split(" = ", 1)
                out[key] = val
    return out
