"""Gridded (rho, cp, cs) material rasters.

File layout: one line of JSON, then a newline, then three row-major
little-endian float64 arrays of shape ``(ny, nx)`` in the order given by
``field_order`` (``["rho", "cp", "cs"]``).  Row ``j`` holds ``y = origin[1] + j dy``
and column ``i`` holds ``x = origin[0] + i dx``.

Header keys: ``nx``, ``ny``, ``dx``, ``dy``, ``origin`` (two floats) and
``field_order``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FIELDS = ("rho", "cp", "cs")


class RasterFormatError(ValueError):
    pass


class InadmissibleRaster(ValueError):
    pass


@dataclass(frozen=True)
class RasterModel:
    rho: np.ndarray
    cp: np.ndarray
    cs: np.ndarray
    dx: float
    dy: float
    origin: tuple[float, float]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rho.shape

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.dx * np.arange(self.shape[1])

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.dy * np.arange(self.shape[0])

    @property
    def extent(self) -> tuple[float, float, float, float]:
        x, y = self.x, self.y
        return float(x[0]), float(x[-1]), float(y[0]), float(y[-1])

    @property
    def mu(self) -> np.ndarray:
        return self.rho * self.cs**2

    @property
    def lam(self) -> np.ndarray:
        return self.rho * self.cp**2 - 2.0 * self.mu

    def lame(self) -> tuple[np.ndarray, np.ndarray]:
        """``mu = rho cs^2`` and ``lambda = rho cp^2 - 2 mu``; rejects ``lambda <= -mu``."""
        mu, lam = self.mu, self.lam
        if np.any(self.rho <= 0) or np.any(mu <= 0):
            raise InadmissibleRaster("raster has nonpositive density or shear modulus")
        if np.any(lam <= -mu):
            bad = int(np.count_nonzero(lam <= -mu))
            raise InadmissibleRaster(f"{bad} nodes have lambda <= -mu (cp too small relative to cs)")
        return mu, lam

    def stiffness(self) -> dict[str, np.ndarray]:
        """Isotropic stiffness constants per node."""
        mu, lam = self.lame()
        c11 = 2.0 * mu + lam
        return {"rho": self.rho, "c11": c11, "c22": c11.copy(), "c33": mu, "c12": lam}

    def downsample(self, stride: int) -> "RasterModel":
        """Keep every ``stride``-th node in each direction, starting at the first."""
        if stride < 1:
            raise ValueError("stride must be positive")
        s = (slice(None, None, stride), slice(None, None, stride))
        return RasterModel(self.rho[s], self.cp[s], self.cs[s], self.dx * stride, self.dy * stride, self.origin)

    def sample(self, x: np.ndarray, y: np.ndarray) -> "RasterModel":
        """Nearest-node lookup of the fields at arbitrary points."""
        i = np.clip(np.rint((np.asarray(x) - self.origin[0]) / self.dx).astype(int), 0, self.shape[1] - 1)
        j = np.clip(np.rint((np.asarray(y) - self.origin[1]) / self.dy).astype(int), 0, self.shape[0] - 1)
        return RasterModel(self.rho[j, i], self.cp[j, i], self.cs[j, i], self.dx, self.dy, self.origin)


def write_raster(path, model: RasterModel) -> None:
    ny, nx = model.shape
    header = {
        "nx": nx,
        "ny": ny,
        "dx": model.dx,
        "dy": model.dy,
        "origin": list(model.origin),
        "field_order": list(FIELDS),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for name in FIELDS:
            fh.write(np.ascontiguousarray(getattr(model, name), dtype="<f8").tobytes())


def ingest_raster_model(path, stride: int = 1) -> RasterModel:
    """Read a raster file, validate it and optionally down-sample it."""
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise RasterFormatError("missing header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise RasterFormatError(f"malformed header: {exc}") from None
    for key in ("nx", "ny", "dx", "dy", "origin", "field_order"):
        if key not in header:
            raise RasterFormatError(f"header is missing {key!r}")
    nx, ny = int(header["nx"]), int(header["ny"])
    dx, dy = float(header["dx"]), float(header["dy"])
    order = list(header["field_order"])
    if nx < 1 or ny < 1 or dx <= 0 or dy <= 0:
        raise RasterFormatError("header needs positive sizes and spacings")
    if sorted(order) != sorted(FIELDS):
        raise RasterFormatError(f"field_order must be a permutation of {list(FIELDS)}, got {order}")
    origin = tuple(float(v) for v in header["origin"])
    if len(origin) != 2:
        raise RasterFormatError("origin must have two entries")
    body = raw[nl + 1 :]
    expected = 3 * nx * ny * 8
    if len(body) != expected:
        raise RasterFormatError(f"expected {expected} data bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f8").reshape(3, ny, nx).astype(float)
    if not np.isfinite(data).all():
        raise RasterFormatError("raster contains non-finite values")
    fields = dict(zip(order, data))
    model = RasterModel(fields["rho"], fields["cp"], fields["cs"], dx, dy, origin)
    model.lame()
    return model.downsample(stride) if stride > 1 else model


def uniform_raster(nx: int, ny: int, dx: float, dy: float, rho: float, cp: float, cs: float, origin=(0.0, 0.0)) -> RasterModel:
    full = np.ones((ny, nx))
    return RasterModel(rho * full, cp * full, cs * full, dx, dy, tuple(origin))


def banded_raster(nx: int, ny: int, dx: float, dy: float, bands, origin=(0.0, 0.0)) -> RasterModel:
    """Horizontal bands ``[(y_top_of_band, rho, cp, cs), ...]`` listed bottom-up;
    a node takes the first band whose top lies at or above it."""
    y = origin[1] + dy * np.arange(ny)
    rho = np.empty((ny, nx))
    cp = np.empty((ny, nx))
    cs = np.empty((ny, nx))
    for j, yj in enumerate(y):
        for top, r, p, s in bands:
            if yj <= top + 1e-12:
                break
        rho[j], cp[j], cs[j] = r, p, s
    return RasterModel(rho, cp, cs, dx, dy, tuple(origin))
