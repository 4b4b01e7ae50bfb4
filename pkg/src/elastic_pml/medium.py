"""Orthotropic 2D elastic media: stiffness constants, coefficient matrices, wave speeds.

A medium is described by the density ``rho`` and four stiffness constants
``c11, c22, c33, c12``.  The flux of the elastic wave equation is

    Tx = A u_x + C u_y,    Ty = C^T u_x + B u_y

with ``A = diag(c11, c33)``, ``B = diag(c33, c22)`` and ``C = [[0, c12], [c33, 0]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class MaterialError(ValueError):
    """Base class for inadmissible material parameters."""


class NonPositiveDensity(MaterialError):
    pass


class EllipticityViolation(MaterialError):
    pass


@dataclass(frozen=True)
class MaterialParams:
    rho: float
    c11: float
    c22: float
    c33: float
    c12: float

    def __post_init__(self) -> None:
        vals = (self.rho, self.c11, self.c22, self.c33, self.c12)
        if not all(math.isfinite(v) for v in vals):
            raise MaterialError(f"material parameters must be finite, got {vals}")
        if self.rho <= 0.0:
            raise NonPositiveDensity(f"rho must be positive, got {self.rho}")
        if self.c11 <= 0.0 or self.c22 <= 0.0 or self.c33 <= 0.0:
            raise EllipticityViolation(
                f"c11, c22, c33 must be positive, got {self.c11}, {self.c22}, {self.c33}"
            )
        if self.c11 * self.c22 - self.c12**2 <= 0.0:
            raise EllipticityViolation(
                f"c11*c22 - c12**2 = {self.c11 * self.c22 - self.c12**2} is not positive"
            )

    @property
    def is_isotropic(self) -> bool:
        """True when the constants come from two Lame parameters."""
        return self.c11 == self.c22 and self.c11 == 2.0 * self.c33 + self.c12

    @property
    def mu(self) -> float:
        return self.c33

    @property
    def lam(self) -> float:
        return self.c12

    def scaled(self, stiffness: float = 1.0, density: float = 1.0) -> "MaterialParams":
        return MaterialParams(
            self.rho * density,
            self.c11 * stiffness,
            self.c22 * stiffness,
            self.c33 * stiffness,
            self.c12 * stiffness,
        )

    def swapped_axes(self) -> "MaterialParams":
        """The same medium with the x and y axes exchanged."""
        return MaterialParams(self.rho, self.c22, self.c11, self.c33, self.c12)

    def to_dict(self) -> dict:
        return {
            "type": "orthotropic",
            "rho": self.rho,
            "c11": self.c11,
            "c22": self.c22,
            "c33": self.c33,
            "c12": self.c12,
        }


@dataclass(frozen=True)
class CoefficientMatrices:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


@dataclass(frozen=True)
class WaveSpeeds:
    cpx: float
    csx: float
    cpy: float
    csy: float

    @property
    def cp_max(self) -> float:
        return max(self.cpx, self.cpy)


def make_orthotropic(rho: float, c11: float, c22: float, c33: float, c12: float) -> MaterialParams:
    return MaterialParams(float(rho), float(c11), float(c22), float(c33), float(c12))


def make_isotropic(rho: float, mu: float, lam: float) -> MaterialParams:
    mu = float(mu)
    lam = float(lam)
    return MaterialParams(float(rho), 2.0 * mu + lam, 2.0 * mu + lam, mu, lam)


def isotropic_from_speeds(rho: float, cs: float, cp: float) -> MaterialParams:
    """Isotropic medium from density and wave speeds (mu = rho cs^2, lambda = rho cp^2 - 2 mu)."""
    mu = rho * cs * cs
    return make_isotropic(rho, mu, rho * cp * cp - 2.0 * mu)


def material_from_dict(spec: dict) -> MaterialParams:
    """Build a medium from a config entry.

    Accepted forms: ``{"type": "isotropic", "rho", "mu", "lambda"}``,
    ``{"type": "isotropic", "rho", "cs", "cp"}`` and
    ``{"type": "orthotropic", "rho", "c11", "c22", "c33", "c12"}``.
    """
    kind = spec.get("type", "orthotropic")
    try:
        if kind == "isotropic":
            if "mu" in spec:
                return make_isotropic(spec["rho"], spec["mu"], spec["lambda"])
            return isotropic_from_speeds(spec["rho"], spec["cs"], spec["cp"])
        if kind == "orthotropic":
            return make_orthotropic(spec["rho"], spec["c11"], spec["c22"], spec["c33"], spec["c12"])
    except KeyError as exc:
        raise MaterialError(f"material spec {spec!r} is missing {exc}") from None
    raise MaterialError(f"unknown material type {kind!r}")


def coefficient_matrices(m: MaterialParams) -> CoefficientMatrices:
    A = np.array([[m.c11, 0.0], [0.0, m.c33]])
    B = np.array([[m.c33, 0.0], [0.0, m.c22]])
    C = np.array([[0.0, m.c12], [m.c33, 0.0]])
    return CoefficientMatrices(A, B, C)


def wave_speeds(m: MaterialParams) -> WaveSpeeds:
    cs = math.sqrt(m.c33 / m.rho)
    return WaveSpeeds(math.sqrt(m.c11 / m.rho), cs, math.sqrt(m.c22 / m.rho), cs)


def strain_energy_matrix(m: MaterialParams) -> np.ndarray:
    """The symmetric 4x4 block matrix ``[[A, C], [C^T, B]]``."""
    c = coefficient_matrices(m)
    return np.block([[c.A, c.C], [c.C.T, c.B]])


def impedance_matrix(m: MaterialParams, nx: float, ny: float) -> np.ndarray:
    """Characteristic impedance for a boundary with unit normal (nx, ny).

    Reduces to ``diag(rho cpx, rho csx)`` for x-normals and ``diag(rho csy, rho cpy)``
    for y-normals.  Off-axis normals use the normal P speed ``sqrt((c11 nx^2 + c22 ny^2)/rho)``.
    """
    cp = math.sqrt((m.c11 * nx * nx + m.c22 * ny * ny) / m.rho)
    cs = math.sqrt(m.c33 / m.rho)
    n = np.array([nx, ny])
    t = np.array([-ny, nx])
    return m.rho * (cp * np.outer(n, n) + cs * np.outer(t, t))
