"""Scenario configs: validation, model assembly, runs and the PML/ABC comparison.

A config is a JSON object::

    {
      "name": "two-layer-iso",
      "domain": {"x": [0, 13.82], "nx": 101, "y_top": 12.57, "y_bottom": -12.57,
                 "periodic_x": false},
      "layers": [{"name": "upper", "ny": 101, "material": {...}}, ...],
      "interfaces": [{"type": "flat", "y": 0.0}],
      "boundaries": {"left": "characteristic", "top": "traction-free", ...},
      "pml": {"faces": ["right"], "width": 1.2566, "reflection": 1e-4, "alpha_ratio": 0.05},
      "initial": {"type": "gaussian", "center": [6.28, 5.03], "coefficient": 20},
      "source": {"type": "moment", "locations": [[20, -15]], "M0": 1000, "width_factor": 0.5},
      "time": {"final": 50, "output_dt": 0.5, "cfl": 0.25},
      "snapshots": [1, 2, 3],
      "dissipation": 0.02,
      "compare": {"nx": 111, "window_x": [0, 11.31], "final": 10, "output_dt": 0.1,
                  "extension": 3}
    }

Layers are listed top to bottom; ``interfaces[k]`` separates layer ``k`` from
layer ``k + 1`` and is either ``{"type": "flat", "y"}`` or
``{"type": "gaussian", "amplitude", "center", "coefficient", "base"}``.
The x-range includes the PML strips.  A material is a medium entry accepted by
:func:`medium.material_from_dict`, or a raster:
``{"type": "raster", "path", "stride"}`` or
``{"type": "raster-bands", "nx", "ny", "dx", "dy", "origin", "bands"}``.
"""

from __future__ import annotations

import copy
import json
import math
import time as _time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import backend, io
from .curvilinear import flat, gaussian_hill, layer_grid, rectangle_grid
from .medium import MaterialError, MaterialParams, material_from_dict
from .modes import geometric_stability_check
from .raster import RasterModel, banded_raster, ingest_raster_model
from .solver import (
    ConfigurationError,
    Discretization,
    LayerSpec,
    MaterialField,
    PmlProfile,
    integrate,
)
from .sources import MomentSource, gaussian_initial_data

PRESETS = ("two-layer-iso", "two-layer-ortho", "four-layer", "curved-interface", "raster")
PML_FACES = {"left": ("x", -1), "right": ("x", 1), "bottom": ("y", -1), "top": ("y", 1)}
OPERATOR = "SBP 4-2 diagonal norm, wide-stencil second derivatives, RK4"


class GeometricCheckFailed(ConfigurationError):
    """A layer inside a PML violates the geometric stability condition."""


# ---------------------------------------------------------------------------
# config loading and validation


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("elastic_pml").joinpath("presets", f"{name}.json").read_text()
    return json.loads(text)


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigurationError(msg)


def validate_config(config: dict) -> dict:
    """Check the schema and fill defaults; returns a normalized deep copy."""
    cfg = copy.deepcopy(config)
    _require(isinstance(cfg, dict), "config must be a JSON object")
    dom = cfg.get("domain")
    _require(isinstance(dom, dict), "config needs a 'domain' object")
    for key in ("x", "nx", "y_top", "y_bottom"):
        _require(key in dom, f"domain is missing {key!r}")
    x0, x1 = map(float, dom["x"])
    _require(x1 > x0, "domain x-range must be increasing")
    _require(float(dom["y_top"]) > float(dom["y_bottom"]), "domain needs y_top > y_bottom")
    _require(int(dom["nx"]) >= 12, "domain nx must be at least 12")
    dom.setdefault("periodic_x", False)

    layers = cfg.get("layers")
    _require(isinstance(layers, list) and layers, "config needs a nonempty 'layers' list")
    for k, lay in enumerate(layers):
        _require("material" in lay, f"layer {k} has no material")
        _require(int(lay.get("ny", 0)) >= 12, f"layer {k} needs ny >= 12")
        lay.setdefault("name", f"layer{k}")
    itfs = cfg.setdefault("interfaces", [])
    _require(len(itfs) == len(layers) - 1, "need exactly one interface between consecutive layers")
    for itf in itfs:
        _require(itf.get("type") in ("flat", "gaussian"), f"unknown interface type {itf.get('type')!r}")

    cfg.setdefault("boundaries", {})
    pml = cfg.setdefault("pml", None)
    if pml:
        faces = pml.get("faces", [])
        _require(all(f in PML_FACES for f in faces), f"PML faces must be among {list(PML_FACES)}")
        _require(float(pml.get("width", 0)) > 0, "PML width must be positive")
        pml.setdefault("reflection", 1e-4)
        pml.setdefault("alpha_ratio", 0.05)

    tm = cfg.get("time")
    _require(isinstance(tm, dict) and "final" in tm, "config needs time.final")
    _require(tm["final"] is not None and float(tm["final"]) > 0, "time.final must be positive")
    tm.setdefault("output_dt", float(tm["final"]) / 100)
    _require(float(tm["output_dt"]) > 0, "time.output_dt must be positive")
    tm.setdefault("cfl", 0.25)
    _require(0 < float(tm["cfl"]) <= 0.5, "time.cfl must lie in (0, 0.5]")
    cfg.setdefault("snapshots", [])
    cfg.setdefault("dissipation", 0.02)
    cfg.setdefault("initial", None)
    cfg.setdefault("source", None)
    cfg.setdefault("allow_geometric_violation", False)
    cfg.setdefault("name", "scenario")
    return cfg


# ---------------------------------------------------------------------------
# model assembly


def _profile(spec: dict):
    if spec["type"] == "flat":
        return flat(float(spec["y"]))
    return gaussian_hill(float(spec["amplitude"]), float(spec["center"]), float(spec["coefficient"]), float(spec.get("base", 0.0)))


def _raster_for(mat: dict, base_dir: Path | None) -> RasterModel:
    if mat["type"] == "raster":
        path = Path(mat["path"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return ingest_raster_model(path, int(mat.get("stride", 1)))
    return banded_raster(
        int(mat["nx"]), int(mat["ny"]), float(mat["dx"]), float(mat["dy"]), [tuple(b) for b in mat["bands"]], tuple(mat.get("origin", (0.0, 0.0)))
    )


def _material(mat: dict, grid, base_dir):
    if mat.get("type") in ("raster", "raster-bands"):
        sampled = _raster_for(mat, base_dir).sample(grid.x, grid.y)
        k = sampled.stiffness()
        return MaterialField(k["rho"], k["c11"], k["c22"], k["c33"], k["c12"])
    try:
        return material_from_dict(mat)
    except MaterialError as exc:
        raise ConfigurationError(str(exc)) from None


def build_layers(cfg: dict, base_dir: Path | None = None, x_range=None, nx=None) -> list[LayerSpec]:
    dom = cfg["domain"]
    x0, x1 = x_range or tuple(map(float, dom["x"]))
    nx = int(nx or dom["nx"])
    periodic = bool(dom.get("periodic_x"))
    tops = [flat(float(dom["y_top"]))] + [_profile(i) for i in cfg["interfaces"]]
    bottoms = [_profile(i) for i in cfg["interfaces"]] + [flat(float(dom["y_bottom"]))]
    out = []
    for k, lay in enumerate(cfg["layers"]):
        ny = int(lay["ny"])
        flat_pair = (k == 0 or cfg["interfaces"][k - 1]["type"] == "flat") and (
            k == len(cfg["layers"]) - 1 or cfg["interfaces"][k]["type"] == "flat"
        )
        if flat_pair:
            yb = float(bottoms[k](np.array([x0]))[0])
            yt = float(tops[k](np.array([x0]))[0])
            _require(yt > yb, f"layer {k} has nonpositive thickness")
            grid = rectangle_grid(x0, x1, yb, yt, nx, ny, periodic_x=periodic)
        else:
            _require(not periodic, "curved interfaces are not supported with periodic x")
            grid = layer_grid(x0, x1, bottoms[k], tops[k], nx, ny)
        out.append(LayerSpec(grid, _material(lay["material"], grid, base_dir), lay["name"]))
    return out


def _cp_max(material) -> float:
    if isinstance(material, MaterialField):
        return material.cp_max
    return math.sqrt(max(material.c11, material.c22) / material.rho)


def build_pml(cfg: dict, layers: list[LayerSpec], x_range=None) -> list[PmlProfile]:
    pml = cfg.get("pml")
    if not pml or not pml.get("faces"):
        return []
    dom = cfg["domain"]
    x0, x1 = x_range or tuple(map(float, dom["x"]))
    width = float(pml["width"])
    cp = max(_cp_max(l.material) for l in layers)
    ends = {"left": x0 + width, "right": x1 - width, "bottom": float(dom["y_bottom"]) + width, "top": float(dom["y_top"]) - width}
    out = []
    for face in pml["faces"]:
        direction, side = PML_FACES[face]
        prof = PmlProfile.from_reflection(ends[face], width, cp, float(pml["reflection"]), float(pml["alpha_ratio"]), direction, side)
        if "sigma0" in pml:
            s0 = float(pml["sigma0"])
            prof = PmlProfile(prof.L, width, s0, float(pml["alpha_ratio"]) * s0, direction, side)
        out.append(prof)
    return out


def geometric_verdicts(cfg: dict, layers: list[LayerSpec], profiles: list[PmlProfile]) -> list[dict]:
    """Geometric stability check of every homogeneous layer along each PML direction."""
    out = []
    for direction in sorted({p.direction for p in profiles}):
        for spec in layers:
            m = spec.material
            if not isinstance(m, MaterialParams):
                out.append({"layer": spec.name, "direction": direction, "admissible": None, "verdict": "not checked (heterogeneous)"})
                continue
            rep = geometric_stability_check(m, 360, direction).to_dict()
            out.append({"layer": spec.name, **rep})
    return out


def build_source(cfg: dict, layers: list[LayerSpec]):
    src = cfg.get("source")
    if not src:
        return None
    _require(src.get("type") == "moment", f"unknown source type {src.get('type')!r}")
    h = min(l.grid.min_spacing() for l in layers)
    w = float(src.get("width_factor", 0.5)) * h
    ms = MomentSource(
        tuple(tuple(map(float, p)) for p in src["locations"]),
        float(src.get("s1", w)),
        float(src.get("s2", w)),
        float(src.get("M0", 1000.0)),
        float(src.get("t0", 0.215)),
        float(src.get("width", 0.15)),
    )
    return ms.layer_forcing([l.grid for l in layers])


def build_discretization(cfg: dict, base_dir: Path | None = None, x_range=None, nx=None, with_pml: bool = True) -> Discretization:
    layers = build_layers(cfg, base_dir, x_range, nx)
    profiles = build_pml(cfg, layers, x_range) if with_pml else []
    return Discretization(
        layers,
        boundaries=cfg["boundaries"],
        pml=profiles,
        periodic_x=bool(cfg["domain"].get("periodic_x")),
        source=build_source(cfg, layers),
        dissipation=float(cfg["dissipation"]),
    )


def initial_state(cfg: dict, disc: Discretization) -> np.ndarray:
    Y = disc.zeros()
    init = cfg.get("initial")
    if not init:
        return Y
    _require(init.get("type") == "gaussian", f"unknown initial data type {init.get('type')!r}")
    center = tuple(map(float, init["center"]))
    for k, lay in enumerate(disc.layers):
        g = lay.spec.grid
        disc.view(Y, k)[0] = gaussian_initial_data(g.x, g.y, center, float(init.get("coefficient", 20.0)))
    return Y


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunResult:
    times: np.ndarray
    norms: np.ndarray
    dt: float
    disc: Discretization
    state: np.ndarray
    manifest: dict = field(default_factory=dict)
    errors: np.ndarray | None = None


def _snapshot_writer(disc: Discretization, out_dir: Path | None, times, files: list):
    pending = sorted(float(t) for t in times)

    def write(t: float, Y: np.ndarray) -> None:
        while pending and t >= pending[0] - 1e-9:
            ts = pending.pop(0)
            if out_dir is None:
                continue
            for k, lay in enumerate(disc.layers):
                g = lay.spec.grid
                ext = [float(g.x.min()), float(g.x.max()), float(g.y.min()), float(g.y.max())]
                p, s = io.write_snapshot(out_dir, f"snapshot_t{ts:g}_layer{k}", disc.displacement_magnitude(Y, k), t, ext, "|u|", k)
                files.extend([p.name, s.name])

    return write


def simulate(
    cfg: dict,
    out_dir=None,
    base_dir: Path | None = None,
    x_range=None,
    nx=None,
    with_pml: bool = True,
    final: float | None = None,
    output_dt: float | None = None,
    observer=None,
    tag: str = "",
) -> RunResult:
    """Run one configured simulation, optionally writing its outputs."""
    cfg = validate_config(cfg)
    disc = build_discretization(cfg, base_dir, x_range, nx, with_pml)
    verdicts = geometric_verdicts(cfg, [l.spec for l in disc.layers], disc.pml)
    bad = [v for v in verdicts if v["admissible"] is False]
    if bad and not cfg["allow_geometric_violation"]:
        raise GeometricCheckFailed("geometric stability condition violated: " + "; ".join(f"{v['layer']} {v['verdict']}" for v in bad))
    Y = initial_state(cfg, disc)
    T = float(final if final is not None else cfg["time"]["final"])
    odt = float(output_dt if output_dt is not None else cfg["time"]["output_dt"])
    out_dir = Path(out_dir) if out_dir is not None else None
    files: list[str] = []
    snap = _snapshot_writer(disc, out_dir, [t for t in cfg["snapshots"] if t <= T], files)
    rows = []

    def callback(t, Y):
        rows.append((t, disc.energy_norm(Y)))
        snap(t, Y)
        if observer is not None:
            observer(disc, t, Y)

    start = _time.perf_counter()
    dt = integrate(disc, Y, 0.0, T, disc.stable_dt(float(cfg["time"]["cfl"])), odt, callback)
    wall = _time.perf_counter() - start
    times, norms = (np.array(c) for c in zip(*rows))
    name = f"norm{tag}.csv"
    if out_dir is not None:
        io.write_csv(out_dir / name, ["t", "norm_H"], rows)
        files.append(name)
        for k, lay in enumerate(disc.layers):
            gp, gs = io.write_grid(out_dir, f"grid{tag}_layer{k}", lay.spec.grid.x, lay.spec.grid.y, k)
            files += [gp.name, gs.name]
    manifest = {
        "name": cfg["name"],
        "config_hash": io.config_hash(cfg),
        "operator": OPERATOR,
        "grids": [list(l.spec.grid.shape) for l in disc.layers],
        "dt": dt,
        "final_time": T,
        "output_dt": odt,
        "steps_per_output": max(1, round(odt / dt)),
        "wall_clock_s": wall,
        "backend": backend.active(),
        "threads": backend.threads(),
        "pml_mode": disc.mode,
        "pml": [vars(p) for p in disc.pml],
        "dissipation": disc.dissipation,
        "empirical": disc.heterogeneous,
        "geometric_check": verdicts,
        "files": files,
    }
    return RunResult(times, norms, dt, disc, Y, manifest)


def run_scenario(cfg: dict, out_dir=None, base_dir: Path | None = None) -> RunResult:
    """Validate, run and (when ``out_dir`` is given) write CSV, snapshots and manifest."""
    res = simulate(cfg, out_dir, base_dir)
    if out_dir is not None:
        io.atomic_write_json(Path(out_dir) / "manifest.json", {**res.manifest, "files": res.manifest["files"] + ["manifest.json"]})
    return res


# ---------------------------------------------------------------------------
# PML versus absorbing boundary comparison


@dataclass
class ComparisonResult:
    times: np.ndarray
    err_pml: np.ndarray
    err_abc: np.ndarray
    manifest: dict

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.err_abc > 0, self.err_pml / self.err_abc, 0.0)

    @property
    def max_ratio(self) -> float:
        return float(self.err_pml.max() / self.err_abc.max())


def _window_values(disc: Discretization, Y: np.ndarray, x0: float, h: float, window) -> np.ndarray:
    """Displacements on the nodes with ``window[0] <= x <= window[1]``, all layers."""
    i0 = int(round((window[0] - x0) / h))
    i1 = int(round((window[1] - x0) / h))
    return np.concatenate([disc.view(Y, k)[0][..., i0 : i1 + 1].ravel() for k in range(len(disc.layers))])


def compare_abc(cfg: dict, out_dir=None, base_dir: Path | None = None) -> ComparisonResult:
    """Reference (extended domain), PML and characteristic-boundary (ABC) runs.

    The PML run uses the configured domain; the ABC run drops the PML strips;
    the reference extends the domain ``extension`` times in the PML direction
    (characteristic boundaries everywhere).  All three share the grid spacing,
    so errors are taken node by node on the comparison window.
    """
    cfg = validate_config(cfg)
    cmp_cfg = cfg.get("compare") or {}
    pml = cfg.get("pml") or {}
    _require(pml.get("faces") == ["right"], "compare-abc supports a single PML on the right face")
    x0, x1 = map(float, cfg["domain"]["x"])
    nx = int(cmp_cfg.get("nx", cfg["domain"]["nx"]))
    h = (x1 - x0) / (nx - 1)
    width = float(pml["width"])
    x_phys = x1 - width
    ext = float(cmp_cfg.get("extension", 3))
    window = tuple(map(float, cmp_cfg.get("window_x", [x0, x_phys - width])))
    T = float(cmp_cfg.get("final", 10.0))
    odt = float(cmp_cfg.get("output_dt", 0.1))

    def nodes(length):
        n = length / h
        _require(abs(n - round(n)) < 1e-6, f"length {length} is not a multiple of the grid spacing {h}")
        return int(round(n)) + 1

    nx_abc = nodes(x_phys - x0)
    x_ref = x0 + ext * (x_phys - x0)
    nx_ref = nodes(x_ref - x0)
    out_dir = Path(out_dir) if out_dir is not None else None

    records = {"ref": [], "pml": [], "abc": []}
    runs = {}
    plan = {
        "ref": dict(x_range=(x0, x_ref), nx=nx_ref, with_pml=False),
        "pml": dict(x_range=(x0, x1), nx=nx, with_pml=True),
        "abc": dict(x_range=(x0, x_phys), nx=nx_abc, with_pml=False),
    }
    for key, kw in plan.items():
        store = records[key]

        def observer(disc, t, Y, store=store):
            store.append(_window_values(disc, Y, x0, h, window))

        runs[key] = simulate(cfg, None, base_dir, kw["x_range"], kw["nx"], kw["with_pml"], T, odt, observer, f"_{key}")
    times = runs["ref"].times
    ref = np.array(records["ref"])
    err = {k: np.abs(np.array(records[k]) - ref).max(axis=1) for k in ("pml", "abc")}
    manifest = {
        "name": cfg["name"],
        "config_hash": io.config_hash(cfg),
        "operator": OPERATOR,
        "window_x": list(window),
        "final_time": T,
        "output_dt": odt,
        "grids": {k: r.manifest["grids"] for k, r in runs.items()},
        "dt": {k: r.dt for k, r in runs.items()},
        "wall_clock_s": {k: r.manifest["wall_clock_s"] for k, r in runs.items()},
        "backend": backend.active(),
        "threads": backend.threads(),
        "empirical": runs["pml"].manifest["empirical"],
        "geometric_check": runs["pml"].manifest["geometric_check"],
        "max_err_pml": float(err["pml"].max()),
        "max_err_abc": float(err["abc"].max()),
        "max_ratio": float(err["pml"].max() / err["abc"].max()),
    }
    result = ComparisonResult(times, err["pml"], err["abc"], manifest)
    if out_dir is not None:
        files = []
        for key in ("pml", "abc"):
            rows = zip(runs[key].times, runs[key].norms, err[key])
            io.write_csv(out_dir / f"{key}.csv", ["t", "norm_H", "max_err"], rows)
            files.append(f"{key}.csv")
        io.write_csv(out_dir / "ratio.csv", ["t", "err_pml", "err_abc", "ratio"], zip(times, err["pml"], err["abc"], result.ratio))
        files += ["ratio.csv", "manifest.json"]
        io.atomic_write_json(out_dir / "manifest.json", {**manifest, "files": files})
    return result
