"""Command-line front end: ``elastic-pml analyze|simulate|compare-abc``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import backend, io, modes
from .medium import MaterialError, material_from_dict
from .scenario import PRESETS, GeometricCheckFailed, compare_abc, load_config, load_preset, run_scenario
from .solver import ConfigurationError, SolverError

log = logging.getLogger("elastic_pml")

ANALYSIS_KINDS = ("slowness", "dispersion-roots", "interface-det-scan", "pml-root-map", "geometric-check")


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--preset", choices=PRESETS, help="built-in scenario preset")
    common.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory (default: ./out)")
    common.add_argument("--threads", type=int, default=1, help="threads for the compiled kernels")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="elastic-pml", description="Layered elastic PML simulator and mode analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="mode-analysis diagnostics written as CSV")
    a.add_argument("kind", choices=ANALYSIS_KINDS)
    a.add_argument("--material", help="medium as JSON (defaults to the first layer of the config or preset)")
    a.add_argument("--bottom-material", help="lower half-plane medium for interface-det-scan")
    a.add_argument("--layer", type=int, default=0, help="layer index taken from the config or preset")
    a.add_argument("--n-angles", type=int, default=720)
    a.add_argument("--s", type=_parse_complex, default=complex(0.1, 1.0), help="Laplace variable for dispersion-roots")
    a.add_argument("--kx", type=float, default=1.0)
    a.add_argument("--xi-min", type=float, default=-10.0)
    a.add_argument("--xi-max", type=float, default=10.0)
    a.add_argument("--n-scan", type=int, default=2001)
    a.add_argument("--xi", type=float, default=3.0)
    a.add_argument("--sigma", type=float, default=2.0)
    a.add_argument("--alpha", type=float, default=0.0)
    a.add_argument("--direction", choices=("x", "y"), default="x")

    sub.add_parser("simulate", parents=[common], help="run a scenario")
    sub.add_parser("compare-abc", parents=[common], help="PML versus absorbing boundaries against a reference run")
    return p


def _scenario_config(args) -> tuple[dict, Path | None]:
    if args.config and args.preset:
        raise ConfigurationError("give either --config or --preset, not both")
    if args.config:
        return load_config(args.config), args.config.parent
    if args.preset:
        return load_preset(args.preset), None
    raise ConfigurationError("a --config file or --preset is required")


def _material_arg(text: str):
    path = Path(text)
    spec = json.loads(path.read_text()) if path.is_file() else json.loads(text)
    return material_from_dict(spec)


def _materials(args):
    """Upper and lower media for the analysis commands."""
    top = bottom = None
    if args.config or args.preset:
        cfg, _ = _scenario_config(args)
        layers = cfg.get("layers", [])
        if not layers:
            raise ConfigurationError("config has no layers")
        k = args.layer
        if not 0 <= k < len(layers):
            raise ConfigurationError(f"layer index {k} out of range")
        try:
            top = material_from_dict(layers[k]["material"])
            if k + 1 < len(layers):
                bottom = material_from_dict(layers[k + 1]["material"])
        except MaterialError as exc:
            raise ConfigurationError(f"layer material: {exc}") from None
    if args.material:
        top = _material_arg(args.material)
    if args.bottom_material:
        bottom = _material_arg(args.bottom_material)
    if top is None:
        raise ConfigurationError("analysis needs --material, --config or --preset")
    return top, bottom


def cmd_analyze(args) -> int:
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    kind = args.kind
    summary: dict = {"kind": kind}
    if kind == "pml-root-map":
        roots = modes.pml_root_map(args.xi, args.sigma, args.alpha)
        rows = [(args.xi, args.sigma, args.alpha, r.real, r.imag) for r in roots]
        io.write_csv(out / "pml_root_map.csv", ["xi", "sigma", "alpha", "re_s", "im_s"], rows)
        summary["roots"] = [[r.real, r.imag] for r in roots]
        for r in rows:
            print(f"s = {r[3]:.12g} {r[4]:+.12g}i")
    else:
        top, bottom = _materials(args)
        summary["material"] = top.to_dict()
        if kind == "slowness":
            rows = modes.slowness_curve(top, args.n_angles)
            io.write_csv(out / "slowness.csv", ["angle", "Sx", "Sy", "branch"], rows)
        elif kind == "dispersion-roots":
            rs = modes.kappa_roots(top, args.s, args.kx)
            rows = [(lab, z.real, z.imag) for lab, zs in (("minus", rs.minus_roots), ("plus", rs.plus_roots)) for z in zs]
            io.write_csv(out / "dispersion_roots.csv", ["side", "re_kappa", "im_kappa"], rows)
            summary.update(s=[args.s.real, args.s.imag], kx=args.kx)
            for lab, re, im in rows:
                print(f"{lab:5s} kappa = {re:.12g} {im:+.12g}i")
        elif kind == "interface-det-scan":
            if bottom is None:
                raise ConfigurationError("interface-det-scan needs two media (--bottom-material or a two-layer config)")
            system = modes.InterfaceSystem(top, bottom)
            eps = modes.IMAG_AXIS_OFFSET * abs(args.kx) * system.c_ref
            xs = np.linspace(args.xi_min, args.xi_max, args.n_scan)
            rows = []
            for xi in xs:
                try:
                    val = abs(modes.interface_determinant(system, complex(eps, xi), args.kx))
                except modes.SignClassificationFailure:
                    val = math.nan
                rows.append((xi, val))
            io.write_csv(out / "interface_det_scan.csv", ["xi", "abs_F"], rows)
            roots = modes.interface_root_search(system, args.kx, (args.xi_min, args.xi_max), args.n_scan)
            summary.update(kx=args.kx, epsilon=eps, bottom=bottom.to_dict(), interface_roots=roots)
            print(f"interface-wave roots: {roots if roots else 'none'}")
        elif kind == "geometric-check":
            rep = modes.geometric_stability_check(top, args.n_angles, args.direction)
            rows = [(th, br, prod) for th, br, prod in rep.flagged]
            io.write_csv(out / "geometric_check.csv", ["angle", "branch", "product"], rows)
            summary["report"] = rep.to_dict()
            print(rep.verdict)
            if not rep.admissible:
                io.atomic_write_json(out / "analysis.json", summary)
                return 3
    io.atomic_write_json(out / "analysis.json", summary)
    return 0


def cmd_simulate(args) -> int:
    cfg, base = _scenario_config(args)
    res = run_scenario(cfg, args.out_dir, base)
    peak = float(res.norms.max())
    print(f"{cfg.get('name', 'scenario')}: {len(res.times)} samples, dt = {res.dt:.4g}, "
          f"final |u|_H = {res.norms[-1]:.3e} ({res.norms[-1] / peak:.3e} of peak)")
    return 0


def cmd_compare_abc(args) -> int:
    cfg, base = _scenario_config(args)
    res = compare_abc(cfg, args.out_dir, base)
    m = res.manifest
    print(f"max PML error {m['max_err_pml']:.3e}, max ABC error {m['max_err_abc']:.3e}, ratio {m['max_ratio']:.3e}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        backend.set_threads(args.threads)
        handler = {"analyze": cmd_analyze, "simulate": cmd_simulate, "compare-abc": cmd_compare_abc}[args.command]
        return handler(args)
    except GeometricCheckFailed as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigurationError, MaterialError, json.JSONDecodeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
