"""Summation-by-parts first-derivative operators and penalty (SAT) terms.

The operator is the diagonal-norm SBP 4-2 family: a fourth-order central
stencil in the interior and second-order accurate closures at the four rows
nearest each boundary.  It satisfies ``H D1 + D1^T H = B`` with
``B = diag(-1, 0, ..., 0, 1)``.

Closure coefficients are the standard diagonal-norm 4-2 values (Strand 1994,
Mattsson & Nordstrom 2004), written as exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction as Fr

import numpy as np

from . import backend

# Boundary norm weights (times h) for the first four nodes.
H_BOUNDARY = (17 / 48, 59 / 48, 43 / 48, 49 / 48)

# Boundary rows of D1 (times h) acting on the first six nodes.
_D1_BOUNDARY_EXACT = (
    (Fr(-24, 17), Fr(59, 34), Fr(-4, 17), Fr(-3, 34), Fr(0), Fr(0)),
    (Fr(-1, 2), Fr(0), Fr(1, 2), Fr(0), Fr(0), Fr(0)),
    (Fr(4, 43), Fr(-59, 86), Fr(0), Fr(59, 86), Fr(-4, 43), Fr(0)),
    (Fr(3, 98), Fr(0), Fr(-59, 98), Fr(0), Fr(32, 49), Fr(-4, 49)),
)
D1_BOUNDARY = np.array([[float(c) for c in row] for row in _D1_BOUNDARY_EXACT])
D1_INTERIOR = np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])

MIN_POINTS = 12


class GridTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class SbpOperator1D:
    """A 1D SBP first-derivative operator on ``n`` uniformly spaced nodes."""

    n: int
    h: float
    periodic: bool = False

    def __post_init__(self) -> None:
        if self.n < MIN_POINTS:
            raise GridTooSmall(f"SBP 4-2 operator needs at least {MIN_POINTS} points, got {self.n}")
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")

    @cached_property
    def H_diag(self) -> np.ndarray:
        w = np.full(self.n, self.h)
        if not self.periodic:
            w[:4] *= H_BOUNDARY
            w[-4:] *= H_BOUNDARY[::-1]
        return w

    @property
    def H(self) -> np.ndarray:
        return np.diag(self.H_diag)

    @property
    def B(self) -> np.ndarray:
        b = np.zeros((self.n, self.n))
        if not self.periodic:
            b[0, 0] = -1.0
            b[-1, -1] = 1.0
        return b

    @cached_property
    def D1(self) -> np.ndarray:
        """Dense matrix form, for checks and small transposed products."""
        n = self.n
        D = np.zeros((n, n))
        if self.periodic:
            for i in range(n):
                for k, c in zip(range(-2, 3), D1_INTERIOR):
                    D[i, (i + k) % n] += c
        else:
            for i in range(4, n - 4):
                D[i, i - 2 : i + 3] = D1_INTERIOR
            D[:4, :6] = D1_BOUNDARY
            D[-4:, -6:] = -D1_BOUNDARY[::-1, ::-1]
        return D / self.h

    @property
    def h0(self) -> float:
        """Norm weight of a boundary node."""
        return self.h if self.periodic else self.h * H_BOUNDARY[0]

    def apply(self, u: np.ndarray, axis: int = -1, out: np.ndarray | None = None) -> np.ndarray:
        return backend.d1(u, axis, self.h, self.periodic, out)


def build_sbp_4(n: int, h: float) -> SbpOperator1D:
    return SbpOperator1D(int(n), float(h), periodic=False)


def build_periodic_4(n: int, h: float) -> SbpOperator1D:
    """Fourth-order central operator on a periodic grid (``H = h I``, ``B = 0``)."""
    return SbpOperator1D(int(n), float(h), periodic=True)


def sbp_residual(op: SbpOperator1D) -> float:
    """``max |H D1 + D1^T H - B|``."""
    HD = op.H_diag[:, None] * op.D1
    return float(np.max(np.abs(HD + HD.T - op.B)))


def second_derivative(op: SbpOperator1D, b, field: np.ndarray, axis: int = -1) -> np.ndarray:
    """Wide-stencil ``D1 diag(b) D1`` applied along ``axis``."""
    b = np.asarray(b, dtype=float)
    if b.ndim and b.shape[-1] != field.shape[axis] and b.shape != field.shape:
        raise ValueError(f"coefficient shape {b.shape} does not match field shape {field.shape}")
    return op.apply(b * op.apply(field, axis), axis)


def apply_mixed_derivative(opx: SbpOperator1D, opy: SbpOperator1D, C: np.ndarray, field: np.ndarray) -> np.ndarray:
    """``Dx (C Dy u)`` for a 2-vector field of shape ``(2, ny, nx)``.

    ``C`` is a 2x2 matrix, or a per-node array of shape ``(2, 2, ny, nx)``.
    """
    if field.ndim != 3 or field.shape[0] != 2:
        raise ValueError(f"expected a (2, ny, nx) field, got {field.shape}")
    if field.shape[-1] != opx.n or field.shape[-2] != opy.n:
        raise ValueError(f"field shape {field.shape} does not match operators ({opy.n}, {opx.n})")
    uy = opy.apply(field, axis=-2)
    C = np.asarray(C, dtype=float)
    if C.ndim == 2:
        flux = np.einsum("ij,j...->i...", C, uy)
    else:
        flux = np.einsum("ij...,j...->i...", C, uy)
    return opx.apply(flux, axis=-1)


# ---------------------------------------------------------------------------
# penalty terms


BOUNDARY_KINDS = ("characteristic", "traction-free")


def sat_boundary(
    kind: str,
    traction: np.ndarray,
    ut: np.ndarray,
    impedance: np.ndarray | None,
    h0: float,
    damped_displacement: np.ndarray | None = None,
) -> np.ndarray:
    """Penalty for one face, to be added at the face nodes.

    ``traction`` is the outward (PML-modified) traction in reference scaling,
    shape ``(2, m)``.  ``impedance`` holds per-node 2x2 matrices, shape
    ``(2, 2, m)``, already multiplied by the surface Jacobian.
    ``damped_displacement`` is ``sigma (u - q)`` for the PML-modified
    characteristic condition.
    """
    if kind == "traction-free":
        return -traction / h0
    if kind != "characteristic":
        raise ValueError(f"unknown boundary kind {kind!r}; expected one of {BOUNDARY_KINDS}")
    rate = ut if damped_displacement is None else ut + damped_displacement
    return -(np.einsum("ij...,j...->i...", impedance, rate) + traction) / h0


def sat_interface(
    T_top: np.ndarray,
    T_bottom: np.ndarray,
    jump: np.ndarray,
    tau: np.ndarray,
    h0_top: float,
    h0_bottom: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Traction and displacement penalties at a horizontal interface.

    ``T_top`` and ``T_bottom`` are the upward tractions on each side, ``jump``
    is ``u_top - u_bottom`` and ``tau`` the per-node penalty strength.
    Returns the row contributions for the top and bottom layers.
    """
    dT = 0.5 * (T_top - T_bottom)
    pen = tau * jump
    return (dT - pen) / h0_top, (dT + pen) / h0_bottom


def interface_penalty_strength(Brr_top: np.ndarray, Brr_bottom: np.ndarray, h0_top: float, h0_bottom: float, safety: float = 1.1) -> np.ndarray:
    """Per-node ``tau`` large enough for a nonnegative discrete energy.

    ``Brr_*`` are the normal-normal stiffness blocks on the interface, shape
    ``(2, 2, m)``; the bound borrows the strain energy of the boundary row.
    """
    def lam_max(M):
        a, b, d = M[0, 0], 0.5 * (M[0, 1] + M[1, 0]), M[1, 1]
        return 0.5 * (a + d) + np.sqrt(0.25 * (a - d) ** 2 + b * b)

    return safety * (lam_max(Brr_top) / (4.0 * h0_top) + lam_max(Brr_bottom) / (4.0 * h0_bottom))


# ---------------------------------------------------------------------------
# artificial dissipation


def undivided_difference(u: np.ndarray, p: int, axis: int = -1, periodic: bool = False) -> np.ndarray:
    """``p``-th undivided difference along ``axis``.

    Non-periodic output has ``n - p`` entries; entry ``i`` uses nodes
    ``i, ..., i + p``.  Periodic output keeps ``n`` entries, entry ``i`` using
    nodes ``i, ..., i + p`` modulo ``n``.
    """
    if periodic:
        out = u
        for _ in range(p):
            out = np.roll(out, -1, axis=axis) - out
        return out
    return np.diff(u, n=p, axis=axis)


def undivided_difference_adjoint(z: np.ndarray, p: int, axis: int = -1, periodic: bool = False) -> np.ndarray:
    """Transpose of :func:`undivided_difference`."""
    out = z
    for _ in range(p):
        if periodic:
            out = np.roll(out, 1, axis=axis) - out
        else:
            pad = [(0, 0)] * out.ndim
            pad[axis] = (1, 1)
            out = -np.diff(np.pad(out, pad), axis=axis)
    return out


def dissipation(u: np.ndarray, weight: np.ndarray, p: int = 3, axis: int = -1, periodic: bool = False) -> np.ndarray:
    """``Delta^T diag(weight) Delta u``, symmetric positive semidefinite for ``weight >= 0``."""
    return undivided_difference_adjoint(weight * undivided_difference(u, p, axis, periodic), p, axis, periodic)


def stencil_average(a: np.ndarray, p: int, axis: int = -1, periodic: bool = False) -> np.ndarray:
    """Node values averaged onto the centres of the ``p``-th difference stencils."""
    lo, hi = p // 2, (p + 1) // 2
    if periodic:
        return 0.5 * (np.roll(a, -lo, axis=axis) + np.roll(a, -hi, axis=axis))
    n = a.shape[axis]
    take = lambda s: np.take(a, np.arange(s, s + n - p), axis=axis)
    return 0.5 * (take(lo) + take(hi))
