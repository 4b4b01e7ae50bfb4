"""Boundary-conforming grids on the unit reference square.

A layer is the image of ``(q, r) in [0, 1]^2`` under a transfinite
interpolation of its four boundary curves.  ``q`` runs along x and ``r`` along
y, with ``r = 0`` the bottom and ``r = 1`` the top of the layer, so interfaces
are always constant-``r`` lines.

Metric terms are computed by differentiating the nodal coordinates with the
same SBP operators the solver uses, which makes constant fields exact
steady states of the mapped interior operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .medium import MaterialParams, coefficient_matrices
from .sbp import SbpOperator1D, build_sbp_4

Curve = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


class DegenerateMapping(ValueError):
    pass


@dataclass(frozen=True)
class MappedGrid:
    """Nodal coordinates and metric terms; arrays have shape ``(nr, nq)``."""

    x: np.ndarray
    y: np.ndarray
    x_q: np.ndarray
    x_r: np.ndarray
    y_q: np.ndarray
    y_r: np.ndarray
    affine: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.shape

    @property
    def J(self) -> np.ndarray:
        """Jacobian determinant ``|J| = x_q y_r - x_r y_q``."""
        return self.x_q * self.y_r - self.x_r * self.y_q

    @property
    def q_x(self) -> np.ndarray:
        return self.y_r / self.J

    @property
    def q_y(self) -> np.ndarray:
        return -self.x_r / self.J

    @property
    def r_x(self) -> np.ndarray:
        return -self.y_q / self.J

    @property
    def r_y(self) -> np.ndarray:
        return self.x_q / self.J

    def jacobian(self) -> np.ndarray:
        """Per-node ``[[x_q, x_r], [y_q, y_r]]``, shape ``(2, 2, nr, nq)``."""
        return np.array([[self.x_q, self.x_r], [self.y_q, self.y_r]])

    def inverse_jacobian(self) -> np.ndarray:
        """Per-node ``[[q_x, q_y], [r_x, r_y]]``."""
        return np.array([[self.q_x, self.q_y], [self.r_x, self.r_y]])

    def min_spacing(self) -> float:
        dxq = np.hypot(np.diff(self.x, axis=1), np.diff(self.y, axis=1))
        dxr = np.hypot(np.diff(self.x, axis=0), np.diff(self.y, axis=0))
        return float(min(dxq.min(), dxr.min()))

    def line_spacing(self) -> float:
        """Smallest distance between neighbouring grid lines, measured normal to them.

        On sheared cells this is much shorter than any edge and is what limits
        the explicit time step.  Affine grids return ``min_spacing``.
        """
        if self.affine:
            return self.min_spacing()
        nr, nq = self.shape
        Ji = self.inverse_jacobian()
        gq = np.hypot(Ji[0, 0], Ji[0, 1]) * (nq - 1)
        gr = np.hypot(Ji[1, 0], Ji[1, 1]) * (nr - 1)
        return float(min(self.min_spacing(), (1.0 / np.maximum(gq, gr)).min()))


def reference_operators(nq: int, nr: int) -> tuple[SbpOperator1D, SbpOperator1D]:
    return build_sbp_4(nq, 1.0 / (nq - 1)), build_sbp_4(nr, 1.0 / (nr - 1))


def rectangle_grid(
    x0: float,
    x1: float,
    y0: float,
    y1: float,
    nq: int,
    nr: int,
    periodic_x: bool = False,
    periodic_y: bool = False,
) -> MappedGrid:
    """Affine grid with exact constant metrics.

    Along a periodic direction ``[x0, x1)`` is one period: nodes sit at
    ``x0 + j (x1 - x0) / n`` and the reference spacing is ``1 / n``.
    """
    lx, ly = x1 - x0, y1 - y0
    if lx <= 0 or ly <= 0:
        raise DegenerateMapping("rectangle must have positive extent")
    q = np.arange(nq) / nq if periodic_x else np.linspace(0.0, 1.0, nq)
    r = np.arange(nr) / nr if periodic_y else np.linspace(0.0, 1.0, nr)
    Q, R = np.meshgrid(q, r)
    ones = np.ones((nr, nq))
    return MappedGrid(x0 + lx * Q, y0 + ly * R, lx * ones, 0.0 * ones, 0.0 * ones, ly * ones, affine=True)


def transfinite_grid(
    bottom: Curve,
    top: Curve,
    left: Curve,
    right: Curve,
    nq: int,
    nr: int,
    corner_tol: float = 1e-10,
) -> MappedGrid:
    """Bilinearly blended transfinite interpolation of four boundary curves.

    ``bottom``/``top`` are parameterized by ``q`` (left to right) and
    ``left``/``right`` by ``r`` (bottom to top).  Each curve maps an array of
    parameters in ``[0, 1]`` to ``(x, y)`` arrays.
    """
    corners = {
        "bottom-left": (bottom(np.array([0.0])), left(np.array([0.0]))),
        "bottom-right": (bottom(np.array([1.0])), right(np.array([0.0]))),
        "top-left": (top(np.array([0.0])), left(np.array([1.0]))),
        "top-right": (top(np.array([1.0])), right(np.array([1.0]))),
    }
    for name, (a, b) in corners.items():
        if math.hypot(float(a[0][0] - b[0][0]), float(a[1][0] - b[1][0])) > corner_tol:
            raise DegenerateMapping(f"boundary curves do not meet at the {name} corner")

    q = np.linspace(0.0, 1.0, nq)
    r = np.linspace(0.0, 1.0, nr)
    xb, yb = (np.asarray(v, dtype=float) for v in bottom(q))
    xt, yt = (np.asarray(v, dtype=float) for v in top(q))
    xl, yl = (np.asarray(v, dtype=float) for v in left(r))
    xr, yr = (np.asarray(v, dtype=float) for v in right(r))
    Q = q[None, :]
    R = r[:, None]

    def blend(b, t, lft, rgt):
        return (
            (1 - R) * b[None, :]
            + R * t[None, :]
            + (1 - Q) * lft[:, None]
            + Q * rgt[:, None]
            - (1 - Q) * (1 - R) * b[0]
            - Q * (1 - R) * b[-1]
            - (1 - Q) * R * t[0]
            - Q * R * t[-1]
        )

    x = blend(xb, xt, xl, xr)
    y = blend(yb, yt, yl, yr)
    return mapped_grid_from_nodes(x, y)


def mapped_grid_from_nodes(x: np.ndarray, y: np.ndarray) -> MappedGrid:
    """Metric terms of nodal coordinates via the SBP first derivative."""
    nr, nq = x.shape
    Dq, Dr = reference_operators(nq, nr)
    grid = MappedGrid(x, y, Dq.apply(x, -1), Dr.apply(x, -2), Dq.apply(y, -1), Dr.apply(y, -2))
    if np.any(grid.J <= 0):
        raise DegenerateMapping(f"mapping folds over: min |J| = {grid.J.min():.3e}")
    return grid


def layer_grid(
    x0: float,
    x1: float,
    bottom_profile: Callable[[np.ndarray], np.ndarray],
    top_profile: Callable[[np.ndarray], np.ndarray],
    nq: int,
    nr: int,
) -> MappedGrid:
    """Layer between two graphs ``y = f(x)`` with vertical sides."""

    def bottom(t):
        xs = x0 + (x1 - x0) * t
        return xs, bottom_profile(xs)

    def top(t):
        xs = x0 + (x1 - x0) * t
        return xs, top_profile(xs)

    yb0, yb1 = float(bottom_profile(np.array([x0]))[0]), float(bottom_profile(np.array([x1]))[0])
    yt0, yt1 = float(top_profile(np.array([x0]))[0]), float(top_profile(np.array([x1]))[0])

    def left(t):
        return np.full_like(t, x0), yb0 + (yt0 - yb0) * t

    def right(t):
        return np.full_like(t, x1), yb1 + (yt1 - yb1) * t

    return transfinite_grid(bottom, top, left, right, nq, nr)


def gaussian_hill(amplitude: float, center: float, coefficient: float, base: float = 0.0):
    """Profile ``y = base + amplitude * exp(-coefficient (x - center)^2)``."""

    def f(x):
        return base + amplitude * np.exp(-coefficient * (np.asarray(x) - center) ** 2)

    return f


def flat(level: float):
    def f(x):
        return np.full(np.shape(x), float(level))

    return f


# ---------------------------------------------------------------------------
# coefficients in reference coordinates


@dataclass(frozen=True)
class TransformedCoefficients:
    """Per-node blocks, each of shape ``(2, 2, nr, nq)``.

    ``A_t, B_t, C_t`` are the reference-space stiffness blocks, so the
    reference fluxes are ``F_q = A_t u_q + C_t u_r`` and
    ``F_r = C_t^T u_q + B_t u_r``.  ``A_h`` and ``B_h`` carry a leading axis
    over the reference direction (q, r): the PML adds ``A_h[d] v + B_h[d] w``
    to ``F_d``.
    """

    A_t: np.ndarray
    B_t: np.ndarray
    C_t: np.ndarray
    A_h: np.ndarray
    B_h: np.ndarray

    def block(self) -> np.ndarray:
        """``[[A_t, C_t], [C_t^T, B_t]]`` per node, shape ``(4, 4, nr, nq)``."""
        Ct = np.swapaxes(self.C_t, 0, 1)
        top = np.concatenate([self.A_t, self.C_t], axis=1)
        bot = np.concatenate([Ct, self.B_t], axis=1)
        return np.concatenate([top, bot], axis=0)


def transform_coefficients(
    grid: MappedGrid,
    material: MaterialParams,
    sigma_x: np.ndarray | float = 0.0,
    sigma_y: np.ndarray | float = 0.0,
) -> TransformedCoefficients:
    """Stiffness blocks seen by the reference derivatives.

    With ``P = [[A, C], [C^T, B]]`` and ``G = blockdiag(J^-1)`` mapping
    reference gradients to physical ones, the reference block is
    ``|J| G^T P G``.  The PML blocks are ``A_h[d] = |J| (sy - sx) d_x A`` and
    ``B_h[d] = |J| (sx - sy) d_y B`` for ``d`` in (q, r).
    """
    c = coefficient_matrices(material)
    J = grid.J
    qx, qy, rx, ry = grid.q_x, grid.q_y, grid.r_x, grid.r_y

    def combo(a, b, M_xx, M_xy, M_yx, M_yy):
        # |J| * sum_ij a_i b_j M_ij with a, b the metric rows
        return J * (
            a[0] * b[0] * M_xx[..., None, None]
            + a[0] * b[1] * M_xy[..., None, None]
            + a[1] * b[0] * M_yx[..., None, None]
            + a[1] * b[1] * M_yy[..., None, None]
        )

    gq = (qx, qy)
    gr = (rx, ry)
    A, B, C = c.A, c.B, c.C
    A_t = combo(gq, gq, A, C, C.T, B)
    B_t = combo(gr, gr, A, C, C.T, B)
    C_t = combo(gq, gr, A, C, C.T, B)
    sx = np.broadcast_to(np.asarray(sigma_x, dtype=float), J.shape)
    sy = np.broadcast_to(np.asarray(sigma_y, dtype=float), J.shape)
    Ad = A[..., None, None]
    Bd = B[..., None, None]
    A_h = np.array([J * (sy - sx) * qx * Ad, J * (sy - sx) * rx * Ad])
    B_h = np.array([J * (sx - sy) * qy * Bd, J * (sx - sy) * ry * Bd])
    return TransformedCoefficients(A_t, B_t, C_t, A_h, B_h)
