"""Semi-discrete PML-augmented elastic system on stacked layers, and RK4 stepping.

Each layer lives on the unit reference square (see :mod:`curvilinear`).  The
momentum equation in reference form reads

    |J| rho (u_tt + (sx + sy) u_t - alpha (sx + sy)(u - q) + sx sy (u - q - r))
        = D_q F_q + D_r F_r + SAT + |J| f

with physical fluxes

    F_x = A u_x + C u_y + (sy - sx) A v,    F_y = C^T u_x + B u_y + (sx - sy) B w

and reference fluxes ``F_q = |J| (q_x F_x + q_y F_y)``,
``F_r = |J| (r_x F_x + r_y F_y)``.  The auxiliary fields obey

    v_t = u_x - (alpha + sx) v,   w_t = u_y - (alpha + sy) w,
    q_t = alpha (u - q),          r_t = alpha (u - q - r).

Without a y-directed PML ``r`` is not carried.  Boundary and interface
conditions are imposed with SAT penalties that make the undamped scheme
energy stable.

Layers are ordered from top to bottom; interface ``k`` joins the bottom row
(``r = 0``) of layer ``k`` to the top row (``r = 1``) of layer ``k + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import backend, sbp
from .curvilinear import MappedGrid
from .medium import MaterialParams

U, UT, V, W, Q, R = range(6)
FACES = ("left", "right", "bottom", "top")


class SolverError(RuntimeError):
    pass


class InstabilityDetected(SolverError):
    """Non-finite values appeared in the state (the NaN tripwire)."""


class ConfigurationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# damping profiles


def damping_strength(cp_max: float, delta: float, reflection: float) -> float:
    """``sigma0 = 4 cp_max / (2 delta) * ln(1 / Ref)``."""
    if not (0 < reflection < 1):
        raise ConfigurationError(f"relative reflection must lie in (0, 1), got {reflection}")
    return 4.0 * cp_max / (2.0 * delta) * math.log(1.0 / reflection)


@dataclass(frozen=True)
class PmlProfile:
    """Cubic ramp ``sigma0 ((coord - L) / delta)^3`` beyond ``L``.

    ``side = +1`` damps ``coord > L`` and ``side = -1`` damps ``coord < L``.
    """

    L: float
    delta: float
    sigma0: float
    alpha: float = 0.0
    direction: str = "x"
    side: int = 1

    def __post_init__(self) -> None:
        if self.direction not in ("x", "y"):
            raise ConfigurationError(f"PML direction must be 'x' or 'y', got {self.direction!r}")
        if self.side not in (1, -1):
            raise ConfigurationError("PML side must be +1 or -1")
        if self.delta <= 0 or self.sigma0 < 0 or self.alpha < 0:
            raise ConfigurationError("PML needs delta > 0, sigma0 >= 0 and alpha >= 0")

    @classmethod
    def from_reflection(
        cls,
        L: float,
        delta: float,
        cp_max: float,
        reflection: float = 1e-4,
        alpha_ratio: float = 0.05,
        direction: str = "x",
        side: int = 1,
    ) -> "PmlProfile":
        s0 = damping_strength(cp_max, delta, reflection)
        return cls(L, delta, s0, alpha_ratio * s0, direction, side)

    def sigma(self, coord) -> np.ndarray:
        d = self.side * (np.asarray(coord, dtype=float) - self.L)
        d = np.maximum(d, 0.0)
        return self.sigma0 * (d / self.delta) ** 3


# ---------------------------------------------------------------------------
# media


@dataclass(frozen=True)
class MaterialField:
    """Node-varying isotropic or orthotropic constants (arrays of the grid shape)."""

    rho: np.ndarray
    c11: np.ndarray
    c22: np.ndarray
    c33: np.ndarray
    c12: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.rho <= 0) or np.any(self.c11 <= 0) or np.any(self.c22 <= 0) or np.any(self.c33 <= 0):
            raise ConfigurationError("node material has nonpositive density or stiffness")
        if np.any(self.c11 * self.c22 - self.c12**2 <= 0):
            raise ConfigurationError("node material violates strict ellipticity")

    @property
    def cp_max(self) -> float:
        return float(np.sqrt(np.maximum(self.c11, self.c22) / self.rho).max())

    @property
    def c_max(self) -> float:
        return self.cp_max


def _cp_max(m) -> float:
    if isinstance(m, MaterialField):
        return m.cp_max
    return math.sqrt(max(m.c11, m.c22) / m.rho)


def impedance_blocks(m, nx, ny) -> np.ndarray:
    """Per-node impedance ``rho (cp(n) n n^T + cs t t^T)``, shape ``(2, 2, ...)``."""
    nx = np.asarray(nx, dtype=float)
    ny = np.asarray(ny, dtype=float)
    cp = np.sqrt((m.c11 * nx * nx + m.c22 * ny * ny) / m.rho)
    cs = np.sqrt(m.c33 / m.rho)
    a = m.rho * cp
    b = m.rho * cs
    return np.array([[a * nx * nx + b * ny * ny, (a - b) * nx * ny], [(a - b) * nx * ny, a * ny * ny + b * nx * nx]])


# ---------------------------------------------------------------------------
# discretization


@dataclass
class LayerSpec:
    grid: MappedGrid
    material: MaterialParams | MaterialField
    name: str = ""


@dataclass
class _Face:
    kind: str
    index: tuple
    axis: str  # "q" or "r"
    sign: int
    h0: float
    Zs: np.ndarray | None
    sigma_t: np.ndarray | float


@dataclass
class _Layer:
    spec: LayerSpec
    ny: int
    nx: int
    Dq: sbp.SbpOperator1D
    Dr: sbp.SbpOperator1D
    affine: bool
    J: object
    qx: object
    qy: object
    rx: object
    ry: object
    rho: object
    c11: object
    c22: object
    c33: object
    c12: object
    Jrho: object
    sx: np.ndarray
    sy: np.ndarray
    sxy: np.ndarray | None
    mask: np.ndarray | None
    Hq: np.ndarray
    Hr: np.ndarray
    diss_q: np.ndarray | None = None  # stencil weights of the artificial dissipation
    diss_r: np.ndarray | None = None
    faces: list = field(default_factory=list)
    offset: int = 0
    size: int = 0


@dataclass
class _Interface:
    top: int
    bottom: int
    tau: np.ndarray
    Ct_top: np.ndarray  # (2, 2, nx) C_t on the interface row of the top layer
    Bt_top: np.ndarray
    Ct_bot: np.ndarray
    Bt_bot: np.ndarray


class Discretization:
    """SBP-SAT semi-discretization of the layered PML-elastic system.

    Parameters
    ----------
    layers
        Layer specs from top to bottom, with conforming interface rows.
    boundaries
        Kind of each outer face: ``{"left", "right", "top", "bottom"}`` to
        ``"characteristic"`` or ``"traction-free"``.
    pml
        Damping profiles; x-profiles are summed into ``sx`` and y-profiles into
        ``sy``.  All profiles share the same ``alpha``.
    mode
        ``"none"``, ``"x"`` or ``"xy"``; inferred from ``pml`` when omitted.
    periodic_x, periodic_y
        Periodic reference directions (``periodic_y`` needs a single layer).
    source
        Optional callable ``source(t) -> list of (2, ny, nx) arrays`` giving the
        body force per unit volume in each layer.
    dissipation
        Strength of the high-order artificial dissipation on the velocity.  It
        damps the spurious grid-scale modes of the wide-stencil operator, which
        boundaries cannot absorb and a PML can amplify.  It never increases the
        discrete energy; ``0`` switches it off.
    """

    DISSIPATION_ORDER = 3

    def __init__(
        self,
        layers: Sequence[LayerSpec],
        boundaries: dict | None = None,
        pml: Sequence[PmlProfile] = (),
        mode: str | None = None,
        periodic_x: bool = False,
        periodic_y: bool = False,
        source: Callable[[float], list] | None = None,
        interface_safety: float = 1.1,
        dissipation: float = 0.02,
    ):
        if not layers:
            raise ConfigurationError("at least one layer is required")
        if periodic_y and len(layers) > 1:
            raise ConfigurationError("periodic_y needs a single layer")
        self.layer_specs = list(layers)
        self.periodic_x = periodic_x
        self.periodic_y = periodic_y
        self.source = source
        if dissipation < 0:
            raise ConfigurationError("dissipation must be nonnegative")
        self.dissipation = float(dissipation)
        self.pml = list(pml)
        alphas = {p.alpha for p in self.pml}
        if len(alphas) > 1:
            raise ConfigurationError("all PML profiles must share the same alpha")
        self.alpha = alphas.pop() if alphas else 0.0
        if mode is None:
            mode = "xy" if any(p.direction == "y" for p in self.pml) else ("x" if self.pml else "none")
        if mode not in ("none", "x", "xy"):
            raise ConfigurationError(f"unknown PML mode {mode!r}")
        if mode == "none" and self.pml:
            raise ConfigurationError("mode 'none' cannot carry PML profiles")
        if mode == "x" and any(p.direction == "y" for p in self.pml):
            raise ConfigurationError("mode 'x' cannot carry a y-directed profile")
        self.mode = mode
        self.nfields = {"none": 2, "x": 5, "xy": 6}[mode]

        bnd = {"left": "characteristic", "right": "characteristic", "top": "characteristic", "bottom": "characteristic"}
        bnd.update(boundaries or {})
        for face, kind in bnd.items():
            if face not in FACES:
                raise ConfigurationError(f"unknown face {face!r}")
            if kind not in sbp.BOUNDARY_KINDS:
                raise ConfigurationError(f"unknown boundary kind {kind!r} on {face}")
        self.boundaries = bnd

        self.layers: list[_Layer] = []
        offset = 0
        nx0 = layers[0].grid.shape[1]
        for k, spec in enumerate(layers):
            lay = self._build_layer(spec)
            if lay.nx != nx0:
                raise ConfigurationError("all layers must share the number of nodes along x")
            lay.offset = offset
            lay.size = self.nfields * 2 * lay.ny * lay.nx
            offset += lay.size
            self.layers.append(lay)
        self.size = offset
        for k, lay in enumerate(self.layers):
            self._build_faces(k, lay)
        self.interfaces = [self._build_interface(k, interface_safety) for k in range(len(self.layers) - 1)]

    # -- construction -------------------------------------------------------

    def _build_layer(self, spec: LayerSpec) -> _Layer:
        g = spec.grid
        ny, nx = g.shape
        Dq = sbp.build_periodic_4(nx, 1.0 / nx) if self.periodic_x else sbp.build_sbp_4(nx, 1.0 / (nx - 1))
        Dr = sbp.build_periodic_4(ny, 1.0 / ny) if self.periodic_y else sbp.build_sbp_4(ny, 1.0 / (ny - 1))
        affine = bool(g.affine)
        if affine:
            J = float(g.J.flat[0])
            qx, qy, rx, ry = float(g.q_x.flat[0]), 0.0, 0.0, float(g.r_y.flat[0])
        else:
            J, qx, qy, rx, ry = g.J, g.q_x, g.q_y, g.r_x, g.r_y
        m = spec.material
        sx = np.zeros((ny, nx))
        sy = np.zeros((ny, nx))
        for p in self.pml:
            if p.direction == "x":
                sx = sx + p.sigma(g.x)
            else:
                sy = sy + p.sigma(g.y)
        sxy = sx * sy if self.mode == "xy" else None
        if sxy is not None and not np.any(sxy != 0):
            sxy = None
        mask = None
        if self.mode != "none":
            damped = (sx != 0) | (sy != 0)
            mask = damped.astype(float)
        diss_q = diss_r = None
        if self.dissipation > 0:
            shape = (ny, nx)
            full = lambda a: np.broadcast_to(np.asarray(a, dtype=float), shape)
            cp = np.sqrt(np.maximum(full(m.c11), full(m.c22)) / full(m.rho))
            base = self.dissipation * full(m.rho) * full(J) * cp
            p = self.DISSIPATION_ORDER
            wq = base * np.hypot(full(qx), full(qy))
            wr = base * np.hypot(full(rx), full(ry))
            diss_q = sbp.stencil_average(wq, p, -1, self.periodic_x)
            diss_r = sbp.stencil_average(wr, p, -2, self.periodic_y)
        return _Layer(
            spec=spec,
            ny=ny,
            nx=nx,
            Dq=Dq,
            Dr=Dr,
            affine=affine,
            J=J,
            qx=qx,
            qy=qy,
            rx=rx,
            ry=ry,
            rho=m.rho,
            c11=m.c11,
            c22=m.c22,
            c33=m.c33,
            c12=m.c12,
            Jrho=J * m.rho,
            sx=sx,
            sy=sy,
            sxy=sxy,
            mask=mask,
            Hq=Dq.H_diag,
            Hr=Dr.H_diag,
            diss_q=diss_q,
            diss_r=diss_r,
        )

    def _node_material(self, lay: _Layer, index):
        m = lay.spec.material
        if isinstance(m, MaterialField):
            return MaterialField(m.rho[index], m.c11[index], m.c22[index], m.c33[index], m.c12[index])
        return m

    def _metric(self, lay: _Layer, name: str, index):
        val = getattr(lay, name)
        if np.isscalar(val):
            return np.full(np.empty((lay.ny, lay.nx))[index].shape, val)
        return val[index]

    def _build_faces(self, k: int, lay: _Layer) -> None:
        nlay = len(self.layers)
        candidates = []
        if not self.periodic_x:
            candidates += [("left", (slice(None), 0), "q", -1), ("right", (slice(None), -1), "q", 1)]
        if not self.periodic_y:
            if k == nlay - 1:
                candidates.append(("bottom", (0, slice(None)), "r", -1))
            if k == 0:
                candidates.append(("top", (-1, slice(None)), "r", 1))
        for name, index, axis, sign in candidates:
            kind = self.boundaries[name]
            h0 = lay.Dq.h0 if axis == "q" else lay.Dr.h0
            Zs = None
            if kind == "characteristic":
                if axis == "q":
                    gx, gy = self._metric(lay, "qx", index), self._metric(lay, "qy", index)
                else:
                    gx, gy = self._metric(lay, "rx", index), self._metric(lay, "ry", index)
                gnorm = np.hypot(gx, gy)
                Js = self._metric(lay, "J", index) * gnorm
                Z = impedance_blocks(self._node_material(lay, index), sign * gx / gnorm, sign * gy / gnorm)
                Zs = Z * Js
            # tangential damping enters the characteristic condition
            sigma_t = (lay.sy if axis == "q" else lay.sx)[index]
            if not np.any(sigma_t != 0):
                sigma_t = 0.0
            lay.faces.append(_Face(kind, index, axis, sign, h0, Zs, sigma_t))

    def _stiffness_rows(self, lay: _Layer, row: int):
        """``C_t`` and ``B_t`` on one grid row, each ``(2, 2, nx)``."""
        idx = (row, slice(None))
        J = self._metric(lay, "J", idx)
        qx, qy = self._metric(lay, "qx", idx), self._metric(lay, "qy", idx)
        rx, ry = self._metric(lay, "rx", idx), self._metric(lay, "ry", idx)
        m = self._node_material(lay, idx)
        c11, c22, c33, c12 = (np.broadcast_to(np.asarray(getattr(m, n), dtype=float), J.shape) for n in ("c11", "c22", "c33", "c12"))
        zero = np.zeros_like(J)
        A = np.array([[c11, zero], [zero, c33]])
        B = np.array([[c33, zero], [zero, c22]])
        C = np.array([[zero, c12], [c33, zero]])
        Ct_ = np.array([[zero, c33], [c12, zero]])

        def combo(a, b):
            return J * (a[0] * b[0] * A + a[0] * b[1] * C + a[1] * b[0] * Ct_ + a[1] * b[1] * B)

        return combo((qx, qy), (rx, ry)), combo((rx, ry), (rx, ry))

    def _build_interface(self, k: int, safety: float) -> _Interface:
        top, bot = self.layers[k], self.layers[k + 1]
        gt, gb = top.spec.grid, bot.spec.grid
        if not (np.allclose(gt.x[0], gb.x[-1], rtol=0, atol=1e-9) and np.allclose(gt.y[0], gb.y[-1], rtol=0, atol=1e-9)):
            raise ConfigurationError(f"interface {k} is not conforming")
        Ct_t, Bt_t = self._stiffness_rows(top, 0)
        Ct_b, Bt_b = self._stiffness_rows(bot, -1)
        tau = sbp.interface_penalty_strength(Bt_t, Bt_b, top.Dr.h0, bot.Dr.h0, safety)
        return _Interface(k, k + 1, tau, Ct_t, Bt_t, Ct_b, Bt_b)

    # -- state helpers ------------------------------------------------------

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    def view(self, Y: np.ndarray, k: int) -> np.ndarray:
        lay = self.layers[k]
        return Y[lay.offset : lay.offset + lay.size].reshape(self.nfields, 2, lay.ny, lay.nx)

    def views(self, Y: np.ndarray) -> list[np.ndarray]:
        return [self.view(Y, k) for k in range(len(self.layers))]

    @property
    def c_max(self) -> float:
        return max(_cp_max(lay.spec.material) for lay in self.layers)

    @property
    def h_min(self) -> float:
        return min(lay.spec.grid.line_spacing() for lay in self.layers)

    def stable_dt(self, cfl: float = 0.25) -> float:
        return cfl * self.h_min / self.c_max

    @property
    def heterogeneous(self) -> bool:
        return any(isinstance(lay.spec.material, MaterialField) for lay in self.layers)

    # -- fluxes -------------------------------------------------------------

    def _gradients(self, lay: _Layer, u: np.ndarray):
        uq = lay.Dq.apply(u, -1)
        ur = lay.Dr.apply(u, -2)
        if lay.affine:
            return lay.qx * uq, lay.ry * ur
        return lay.qx * uq + lay.rx * ur, lay.qy * uq + lay.ry * ur

    def _physical_flux(self, lay: _Layer, ux, uy, v=None, w=None):
        Fx = np.empty_like(ux)
        Fy = np.empty_like(uy)
        Fx[0] = lay.c11 * ux[0] + lay.c12 * uy[1]
        Fx[1] = lay.c33 * (ux[1] + uy[0])
        Fy[0] = lay.c33 * (ux[1] + uy[0])
        Fy[1] = lay.c12 * ux[0] + lay.c22 * uy[1]
        if v is not None:
            dyx = lay.sy - lay.sx
            Fx[0] += dyx * (lay.c11 * v[0])
            Fx[1] += dyx * (lay.c33 * v[1])
            Fy[0] -= dyx * (lay.c33 * w[0])
            Fy[1] -= dyx * (lay.c22 * w[1])
        return Fx, Fy

    def _reference_flux(self, lay: _Layer, Fx, Fy):
        if lay.affine:
            return (lay.J * lay.qx) * Fx, (lay.J * lay.ry) * Fy
        return lay.J * (lay.qx * Fx + lay.qy * Fy), lay.J * (lay.rx * Fx + lay.ry * Fy)

    # -- right-hand side ----------------------------------------------------

    def rhs(self, t: float, Y: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(Y)
        ys = self.views(Y)
        ds = self.views(out)
        pml = self.mode != "none"
        alpha = self.alpha
        forces = self.source(t) if self.source is not None else None
        fluxes = []
        for k, lay in enumerate(self.layers):
            y = ys[k]
            u = y[U]
            ux, uy = self._gradients(lay, u)
            Fx, Fy = self._physical_flux(lay, ux, uy, y[V] if pml else None, y[W] if pml else None)
            Fq, Fr = self._reference_flux(lay, Fx, Fy)
            fluxes.append(Fr)
            div = lay.Dq.apply(Fq, -1)
            div += lay.Dr.apply(Fr, -2)
            self._boundary_sat(lay, y, Fq, Fr, div)
            d = ds[k]
            d[U] = y[UT]
            d[UT] = div / lay.Jrho
            if forces is not None and forces[k] is not None:
                d[UT] += forces[k] / lay.rho
            if lay.diss_q is not None:
                d[UT] -= self._dissipation(lay, y[UT])
            if pml:
                ssum = lay.sx + lay.sy
                umq = u - y[Q]
                d[UT] -= ssum * y[UT] - alpha * ssum * umq
                if lay.sxy is not None:
                    d[UT] -= lay.sxy * (umq - y[R])
                d[V] = (ux - (alpha + lay.sx) * y[V]) * lay.mask
                d[W] = (uy - (alpha + lay.sy) * y[W]) * lay.mask
                d[Q] = (alpha * umq) * lay.mask
                if self.mode == "xy":
                    d[R] = (alpha * (umq - y[R])) * lay.mask
        for itf in self.interfaces:
            self._interface_sat(itf, ys, ds, fluxes)
        return out

    def _dissipation(self, lay: _Layer, ut: np.ndarray) -> np.ndarray:
        out = backend.diss3(ut, lay.diss_q, -1, self.periodic_x)
        out /= lay.Hq
        out += backend.diss3(ut, lay.diss_r, -2, self.periodic_y) / lay.Hr[:, None]
        out /= lay.Jrho
        return out

    def _boundary_sat(self, lay: _Layer, y: np.ndarray, Fq, Fr, div) -> None:
        for f in lay.faces:
            idx = (slice(None),) + f.index
            flux = Fq if f.axis == "q" else Fr
            traction = f.sign * flux[idx]
            damped = None
            if f.kind == "characteristic" and not np.isscalar(f.sigma_t) and self.mode != "none":
                damped = f.sigma_t * (y[U][idx] - y[Q][idx])
            div[idx] += sbp.sat_boundary(f.kind, traction, y[UT][idx], f.Zs, f.h0, damped)

    def _interface_sat(self, itf: _Interface, ys, ds, fluxes) -> None:
        top, bot = self.layers[itf.top], self.layers[itf.bottom]
        yt, yb = ys[itf.top], ys[itf.bottom]
        Tt = fluxes[itf.top][:, 0, :]
        Tb = fluxes[itf.bottom][:, -1, :]
        jump = yt[U][:, 0, :] - yb[U][:, -1, :]
        ct, cb = sbp.sat_interface(Tt, Tb, jump, itf.tau, top.Dr.h0, bot.Dr.h0)
        dt_ = ds[itf.top][UT]
        db_ = ds[itf.bottom][UT]
        adj_t = self._adjoint(top, 0, itf.Ct_top, itf.Bt_top, jump)
        adj_b = self._adjoint(bot, -1, itf.Ct_bot, itf.Bt_bot, jump)
        # the penalties act on |J| rho u_tt
        self._add_scaled(top, dt_, 0, ct, adj_t)
        self._add_scaled(bot, db_, -1, cb, adj_b)

    def _adjoint(self, lay: _Layer, row: int, Ct, Bt, jump):
        """``-1/2 (Hq Hr)^-1 T^T (Hq jump)`` with ``T u = C_t^T D_q u + B_t D_r u`` on ``row``."""
        g = lay.Hq * jump
        z1 = np.einsum("ij...,j...->i...", Ct, g)
        z2 = np.einsum("ij...,j...->i...", Bt, g)
        Dq = lay.Dq.D1
        row_term = (z1 @ Dq) / lay.Hq / lay.Dr.H_diag[row]
        Dr_row = lay.Dr.D1[row]
        rows = np.nonzero(Dr_row)[0]
        col_terms = Dr_row[rows, None, None] / lay.Hr[rows, None, None] * (z2 / lay.Hq)[None]
        return -0.5 * row_term, rows, -0.5 * col_terms

    def _add_scaled(self, lay: _Layer, dut, row, contrib, adj) -> None:
        row_term, rows, col_terms = adj
        Jrho_row = lay.Jrho if np.isscalar(lay.Jrho) else lay.Jrho[row]
        dut[:, row, :] += (contrib + row_term) / Jrho_row
        Jrho_rows = lay.Jrho if np.isscalar(lay.Jrho) else lay.Jrho[rows][None]
        dut[:, rows, :] += np.swapaxes(col_terms, 0, 1) / Jrho_rows

    # -- diagnostics --------------------------------------------------------

    def weights(self, k: int) -> np.ndarray:
        lay = self.layers[k]
        return lay.Hr[:, None] * lay.Hq[None, :] * lay.J

    def energy_norm(self, Y: np.ndarray) -> float:
        """``sqrt(sum_k u^T H_k u)`` with the physical quadrature weights."""
        total = 0.0
        for k in range(len(self.layers)):
            u = self.view(Y, k)[U]
            total += float(np.sum(self.weights(k) * (u[0] ** 2 + u[1] ** 2)))
        return math.sqrt(total)

    def mechanical_energy(self, Y: np.ndarray) -> float:
        """Discrete energy of the undamped scheme, including interface terms.

        It is conserved for periodic and traction-free closures and
        non-increasing with characteristic boundaries.
        """
        total = 0.0
        trs = []
        for k, lay in enumerate(self.layers):
            y = self.view(Y, k)
            ux, uy = self._gradients(lay, y[U])
            Fx, Fy = self._physical_flux(lay, ux, uy)
            dens = lay.rho * (y[UT][0] ** 2 + y[UT][1] ** 2) + ux[0] * Fx[0] + ux[1] * Fx[1] + uy[0] * Fy[0] + uy[1] * Fy[1]
            total += 0.5 * float(np.sum(self.weights(k) * dens))
            trs.append(self._reference_flux(lay, Fx, Fy)[1])
        for itf in self.interfaces:
            top = self.layers[itf.top]
            jump = self.view(Y, itf.top)[U][:, 0, :] - self.view(Y, itf.bottom)[U][:, -1, :]
            T = trs[itf.top][:, 0, :] + trs[itf.bottom][:, -1, :]
            total += 0.5 * float(np.sum(top.Hq * np.sum(jump * T, axis=0)))
            total += 0.5 * float(np.sum(top.Hq * itf.tau * np.sum(jump * jump, axis=0)))
        return total

    def displacement_magnitude(self, Y: np.ndarray, k: int) -> np.ndarray:
        u = self.view(Y, k)[U]
        return np.hypot(u[0], u[1])


# ---------------------------------------------------------------------------
# state and time stepping


@dataclass
class SimulationState:
    disc: Discretization
    data: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, disc: Discretization) -> "SimulationState":
        return cls(disc, disc.zeros(), 0.0)

    def layer(self, k: int) -> np.ndarray:
        """Fields of layer ``k`` as ``(nfields, 2, ny, nx)``: u, u_t, v, w, q[, r]."""
        return self.disc.view(self.data, k)

    def copy(self) -> "SimulationState":
        return SimulationState(self.disc, self.data.copy(), self.t)


def rhs(state: SimulationState, disc: Discretization | None = None) -> np.ndarray:
    disc = disc or state.disc
    return disc.rhs(state.t, state.data)


class RK4:
    """Classical fourth-order Runge-Kutta with preallocated stage buffers."""

    def __init__(self, disc: Discretization):
        self.disc = disc
        n = disc.size
        self.k = [np.empty(n) for _ in range(4)]
        self.tmp = np.empty(n)

    def step(self, t: float, Y: np.ndarray, dt: float) -> None:
        """Advance ``Y`` in place from ``t`` to ``t + dt``."""
        f = self.disc.rhs
        k1, k2, k3, k4 = self.k
        tmp = self.tmp
        f(t, Y, k1)
        np.multiply(k1, 0.5 * dt, out=tmp)
        tmp += Y
        f(t + 0.5 * dt, tmp, k2)
        np.multiply(k2, 0.5 * dt, out=tmp)
        tmp += Y
        f(t + 0.5 * dt, tmp, k3)
        np.multiply(k3, dt, out=tmp)
        tmp += Y
        f(t + dt, tmp, k4)
        k2 += k3
        k2 *= 2.0
        k1 += k4
        k1 += k2
        k1 *= dt / 6.0
        Y += k1


def check_finite(Y: np.ndarray, t: float) -> None:
    if not np.isfinite(Y).all():
        raise InstabilityDetected(f"non-finite values in the state at t = {t:.6g}")


def rk4_step(state: SimulationState, dt: float, disc: Discretization | None = None) -> SimulationState:
    """One RK4 step returning a new state; raises on non-finite values."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    disc = disc or state.disc
    Y = state.data.copy()
    RK4(disc).step(state.t, Y, dt)
    check_finite(Y, state.t + dt)
    return SimulationState(disc, Y, state.t + dt)


def energy_norm(state: SimulationState) -> float:
    return state.disc.energy_norm(state.data)


def mechanical_energy(state: SimulationState, disc: Discretization | None = None) -> float:
    return (disc or state.disc).mechanical_energy(state.data)


def integrate(
    disc: Discretization,
    Y: np.ndarray,
    t0: float,
    t_end: float,
    dt_max: float,
    output_dt: float,
    callback: Callable[[float, np.ndarray], None],
    check_every: int = 1,
) -> float:
    """March to ``t_end``, calling ``callback(t, Y)`` at ``t0`` and every ``output_dt``.

    Each output interval is split into equal steps no larger than ``dt_max``,
    so output times are hit exactly.  Returns the step size used.
    """
    if t_end <= t0:
        raise ConfigurationError("final time must exceed the start time")
    if output_dt <= 0:
        raise ConfigurationError("output interval must be positive")
    n_out = math.ceil((t_end - t0) / output_dt - 1e-9)
    stepper = RK4(disc)
    callback(t0, Y)
    t = t0
    dt_used = dt_max
    count = 0
    for j in range(1, n_out + 1):
        t_next = min(t0 + j * output_dt, t_end)
        nsub = max(1, math.ceil((t_next - t) / dt_max - 1e-9))
        dt = (t_next - t) / nsub
        dt_used = dt
        for _ in range(nsub):
            stepper.step(t, Y, dt)
            t += dt
            count += 1
            if count % check_every == 0:
                check_finite(Y, t)
        t = t_next
        check_finite(Y, t)
        callback(t, Y)
    return dt_used
