"""BOZKFLD1 binary field snapshots and small CSV/JSON helpers."""
from __future__ import annotations

import csv
import json
import os
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .spectral import Grid2D, RealField

MAGIC = b"BOZKFLD1"
_HEADER = struct.Struct("<8sIIdd")


class SnapshotFormatError(ValueError):
    """Raised when a snapshot file is truncated or has a bad header."""


def write_snapshot(path, f: RealField) -> None:
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.nx, g.ny, g.lx, g.ly))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path) -> RealField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: file too short for a BOZKFLD1 header")
    magic, nx, ny, lx, ly = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    body = data[_HEADER.size:]
    if len(body) != 8 * nx * ny:
        raise SnapshotFormatError(
            f"{path}: payload has {len(body)} bytes, expected {8 * nx * ny}")
    try:
        grid = Grid2D(nx, ny, lx, ly)
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: invalid grid in header: {exc}") from exc
    vals = np.frombuffer(body, dtype="<f8").reshape(ny, nx)
    try:
        return RealField(grid, vals)
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: {exc}") from exc


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    return v


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    if not os.access(p, os.W_OK):
        raise PermissionError(f"output directory {p} is not writable")
    return p
