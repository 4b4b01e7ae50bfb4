"""Output files: CSV time series, raw snapshots with JSON sidecars, run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, obj) -> None:
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n").encode("utf-8"))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def config_hash(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    os.replace(tmp, path)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, np.array(rows)


def write_array(path, array: np.ndarray, meta: dict) -> tuple[Path, Path]:
    """Raw little-endian float64 data plus a ``.json`` sidecar with shape and metadata."""
    path = Path(path)
    arr = np.ascontiguousarray(array, dtype="<f8")
    atomic_write_bytes(path, arr.tobytes())
    side = path.with_suffix(path.suffix + ".json")
    atomic_write_json(side, {"shape": list(arr.shape), "dtype": "<f8", **meta})
    return path, side


def read_array(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    data = np.fromfile(path, dtype="<f8").reshape(meta["shape"])
    return data, meta


def write_snapshot(out_dir, name: str, field: np.ndarray, time: float, extent, field_name: str, layer: int):
    return write_array(
        Path(out_dir) / f"{name}.f64",
        field,
        {"time": float(time), "extent": [float(v) for v in extent], "field": field_name, "layer": int(layer)},
    )


def write_grid(out_dir, name: str, x: np.ndarray, y: np.ndarray, layer: int):
    """Nodal coordinates as a ``(2, nr, nq)`` array (x then y)."""
    return write_array(
        Path(out_dir) / f"{name}.f64",
        np.array([x, y]),
        {"field": "grid", "components": ["x", "y"], "layer": int(layer)},
    )
