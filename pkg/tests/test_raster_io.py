import json

import numpy as np
import pytest

from elastic_pml import io
from elastic_pml.raster import (
    InadmissibleRaster,
    RasterFormatError,
    banded_raster,
    ingest_raster_model,
    uniform_raster,
    write_raster,
)


def test_uniform_round_trip(tmp_path):
    path = tmp_path / "u.raster"
    write_raster(path, uniform_raster(9, 7, 0.5, 0.25, 1.5, 3.118, 1.8, origin=(1.0, -2.0)))
    m = ingest_raster_model(path)
    mu, lam = m.lame()
    assert np.allclose(mu, 4.86, rtol=0, atol=1e-3)
    assert np.allclose(lam, 4.8629, rtol=0, atol=1e-3)
    assert m.shape == (7, 9) and m.origin == (1.0, -2.0)
    assert m.extent == (1.0, 5.0, -2.0, -0.5)


def test_field_order_is_honoured(tmp_path):
    rng = np.random.default_rng(0)
    rho, cs = rng.uniform(1, 2, (2, 4, 5))
    cp = 2 * cs
    path = tmp_path / "p.raster"
    with open(path, "wb") as fh:
        fh.write(json.dumps({"nx": 5, "ny": 4, "dx": 1, "dy": 1, "origin": [0, 0], "field_order": ["cs", "rho", "cp"]}).encode() + b"\n")
        for a in (cs, rho, cp):
            fh.write(a.astype("<f8").tobytes())
    m = ingest_raster_model(path)
    assert np.array_equal(m.rho, rho) and np.array_equal(m.cs, cs) and np.array_equal(m.cp, cp)


@pytest.mark.parametrize("shape,expected", [((7, 9), (4, 5)), ((8, 10), (4, 5))])
def test_stride_two(tmp_path, shape, expected):
    ny, nx = shape
    model = uniform_raster(nx, ny, 0.1, 0.2, 1.0, 2.0, 1.0)
    path = tmp_path / "s.raster"
    write_raster(path, model)
    m = ingest_raster_model(path, stride=2)
    assert m.shape == expected
    assert m.dx == pytest.approx(0.2) and m.dy == pytest.approx(0.4)
    if nx % 2:
        # odd sizes keep the last node as well as the first
        assert m.x[-1] == pytest.approx(model.x[-1])


def test_downsample_rejects_zero():
    with pytest.raises(ValueError):
        uniform_raster(4, 4, 1, 1, 1, 2, 1).downsample(0)


def _write(path, header, nbytes=None):
    body = np.ones(3 * header.get("nx", 1) * header.get("ny", 1)).astype("<f8").tobytes()
    path.write_bytes(json.dumps(header).encode() + b"\n" + body[: nbytes if nbytes is not None else len(body)])


GOOD = {"nx": 3, "ny": 2, "dx": 1.0, "dy": 1.0, "origin": [0, 0], "field_order": ["rho", "cp", "cs"]}


@pytest.mark.parametrize(
    "header,nbytes",
    [
        ({k: v for k, v in GOOD.items() if k != "dx"}, None),
        ({**GOOD, "field_order": ["rho", "cp", "vp"]}, None),
        ({**GOOD, "dy": -1.0}, None),
        ({**GOOD, "origin": [0]}, None),
        (GOOD, 100),
    ],
)
def test_malformed(tmp_path, header, nbytes):
    path = tmp_path / "bad.raster"
    _write(path, header, nbytes)
    with pytest.raises(RasterFormatError):
        ingest_raster_model(path)


def test_missing_header_line(tmp_path):
    path = tmp_path / "bad.raster"
    path.write_bytes(b"{not json")
    with pytest.raises(RasterFormatError):
        ingest_raster_model(path)
    path.write_bytes(b"{not json\n")
    with pytest.raises(RasterFormatError):
        ingest_raster_model(path)


def test_non_finite(tmp_path):
    m = uniform_raster(3, 3, 1, 1, 1.0, 2.0, 1.0)
    m.cp[1, 1] = np.nan
    path = tmp_path / "nan.raster"
    write_raster(path, m)
    with pytest.raises(RasterFormatError):
        ingest_raster_model(path)


def test_negative_lambda_allowed_above_minus_mu():
    # cp^2 < 2 cs^2 gives lambda < 0, fine while lambda > -mu
    m = uniform_raster(2, 2, 1, 1, 1.0, 1.2, 1.0)
    mu, lam = m.lame()
    assert np.all(lam < 0) and np.all(lam > -mu)


@pytest.mark.parametrize("cp,cs", [(1.0, 1.0), (1.0, 0.0)])
def test_inadmissible(tmp_path, cp, cs):
    path = tmp_path / "i.raster"
    write_raster(path, uniform_raster(3, 3, 1, 1, 1.0, cp, cs))
    with pytest.raises(InadmissibleRaster):
        ingest_raster_model(path)


def test_banded_raster():
    m = banded_raster(4, 24, 0.1, 0.1, [(-1.2, 1.9, 3.984, 2.3), (0.0, 1.5, 3.118, 1.8)], origin=(0, -2.3))
    assert np.all(m.rho[m.y <= -1.2 + 1e-12] == 1.9)
    assert np.all(m.rho[m.y > -1.2 + 1e-12] == 1.5)
    s = m.sample(np.array([0.05, 0.3]), np.array([-2.3, -0.01]))
    assert np.array_equal(s.rho, [1.9, 1.5])
    k = m.stiffness()
    assert np.allclose(k["c11"], m.rho * m.cp**2)


# -- output files --------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    rows = [(0.0, 1.0), (0.1, 1 / 3)]
    io.write_csv(tmp_path / "a.csv", ["t", "v"], rows)
    header, data = io.read_csv(tmp_path / "a.csv")
    assert header == ["t", "v"]
    # repr formatting is lossless
    assert data[1, 1] == 1 / 3
    assert not list(tmp_path.glob("*.tmp"))


def test_array_with_sidecar(tmp_path):
    a = np.arange(12.0).reshape(3, 4)
    p, s = io.write_snapshot(tmp_path, "snap", a, 1.5, (0, 1, 2, 3), "|u|", 1)
    b, meta = io.read_array(p)
    assert np.array_equal(a, b)
    assert meta["time"] == 1.5 and meta["layer"] == 1 and meta["shape"] == [3, 4]
    assert p.read_bytes() == a.astype("<f8").tobytes()


def test_atomic_json(tmp_path):
    path = tmp_path / "sub" / "m.json"
    io.atomic_write_json(path, {"x": np.float64(0.5), "a": np.arange(2), "p": path})
    data = json.loads(path.read_text())
    assert data == {"x": 0.5, "a": [0, 1], "p": str(path)}
    with pytest.raises(TypeError):
        io.atomic_write_json(path, {"bad": object()})
    # a failed write leaves the previous file intact and no temporaries behind
    assert json.loads(path.read_text()) == data
    assert [f.name for f in path.parent.iterdir()] == ["m.json"]


def test_config_hash_is_order_independent():
    a = {"x": 1, "y": [1, 2], "z": {"b": 1, "a": 2}}
    b = {"z": {"a": 2, "b": 1}, "y": [1, 2], "x": 1}
    assert io.config_hash(a) == io.config_hash(b)
    assert io.config_hash(a) != io.config_hash({**a, "x": 2})
