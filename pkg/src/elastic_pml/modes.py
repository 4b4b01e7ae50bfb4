"""Plane-wave and normal-mode analysis of layered elastic media with a PML.

Conventions
-----------
A plane wave is ``u0 exp(s t + i (kx x + ky y))``; it solves the elastic wave
equation when ``F(s, k) = det(s^2 I + P(k)) = 0`` with the symbol
``P(k) = (kx^2 A + ky^2 B + kx ky (C + C^T)) / rho``.

For a horizontal interface at ``y = 0`` the modal ansatz is
``Phi exp(kappa y) exp(s t + i kx x)``, and ``kappa`` solves
``det(s^2 I + P(kx, kappa)) = 0`` with
``P(kx, kappa) = (kx^2 A - kappa^2 B - i kx kappa (C + C^T)) / rho``.
The upper half-plane keeps the two roots with negative real part and the lower
half-plane the two with positive real part.

The PML replaces ``kx`` by ``kx / Sx`` with ``Sx = 1 + sigma / (alpha + s)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .medium import MaterialParams, coefficient_matrices, wave_speeds


class ModeAnalysisError(ArithmeticError):
    pass


class DegenerateBranch(ModeAnalysisError):
    """The two body-wave eigenvalues coincide, so the group velocity is undefined."""


class SignClassificationFailure(ModeAnalysisError):
    """A kappa root sits on the imaginary axis (Re(s) <= 0 or a degenerate input)."""


class PoleAtMinusAlpha(ModeAnalysisError, ZeroDivisionError):
    pass


# Relative tolerance used to detect a vanishing real part of a kappa root.
SIGN_TOL = 1e-12
# Offset of the imaginary-axis scan into Re(s) > 0, in units of |kx| * c_ref.
IMAG_AXIS_OFFSET = 1e-8


# ---------------------------------------------------------------------------
# body waves


def symbol_matrix(m: MaterialParams, kx, ky) -> np.ndarray:
    """The 2x2 symbol ``P(k)``; works for complex wavenumbers."""
    c = coefficient_matrices(m)
    return (kx * kx * c.A + ky * ky * c.B + kx * ky * (c.C + c.C.T)) / m.rho


def dispersion_F(m: MaterialParams, s, kx, ky):
    """Expanded quartic ``F(s, k) = det(s^2 I + P(k))``; vectorizes over numpy inputs."""
    kx2 = kx * kx
    ky2 = ky * ky
    s2 = s * s
    a = ((m.c11 + m.c33) * kx2 + (m.c22 + m.c33) * ky2) / m.rho
    e = m.c11 * m.c22 + m.c33 * m.c33 - (m.c33 + m.c12) ** 2
    b = (m.c11 * m.c33 * kx2 * kx2 + m.c22 * m.c33 * ky2 * ky2 + e * kx2 * ky2) / (m.rho * m.rho)
    return s2 * s2 + a * s2 + b


def _trace_det(m: MaterialParams, kx: float, ky: float) -> tuple[float, float]:
    kx2 = kx * kx
    ky2 = ky * ky
    tr = ((m.c11 + m.c33) * kx2 + (m.c22 + m.c33) * ky2) / m.rho
    e = m.c11 * m.c22 + m.c33 * m.c33 - (m.c33 + m.c12) ** 2
    det = (m.c11 * m.c33 * kx2 * kx2 + m.c22 * m.c33 * ky2 * ky2 + e * kx2 * ky2) / (m.rho * m.rho)
    return tr, det


def body_wave_eigenvalues(m: MaterialParams, k) -> tuple[float, float]:
    """The eigenvalues ``-s1^2 >= -s2^2 > 0`` of ``P(k)`` (quasi-P first)."""
    kx, ky = float(k[0]), float(k[1])
    k2 = kx * kx + ky * ky
    if k2 == 0.0:
        raise ValueError("wave vector must be nonzero")
    if m.is_isotropic:
        cp2 = m.c11 / m.rho
        cs2 = m.c33 / m.rho
        return cp2 * k2, cs2 * k2
    tr, det = _trace_det(m, kx, ky)
    # off-diagonal form of the discriminant avoids cancellation when the eigenvalues are close
    d1 = ((m.c11 - m.c33) * kx * kx + (m.c33 - m.c22) * ky * ky) / m.rho
    off = (m.c12 + m.c33) * kx * ky / m.rho
    lam1 = 0.5 * (tr + math.hypot(d1, 2.0 * off))
    # product of the roots instead of the difference, which cancels badly
    lam2 = det / lam1
    return lam1, lam2


@dataclass(frozen=True)
class KinematicQuantities:
    direction: tuple[float, float]
    omega: float
    phase_velocity: tuple[float, float]
    slowness: tuple[float, float]
    group_velocity: tuple[float, float]


def _branch_index(branch) -> int:
    if branch in (0, "P", "p", "qP"):
        return 0
    if branch in (1, "S", "s", "qS"):
        return 1
    raise ValueError(f"unknown branch {branch!r}; use 'P' or 'S'")


def kinematics(m: MaterialParams, k, branch="P") -> KinematicQuantities:
    """Phase/group velocity and slowness of one body-wave branch.

    The group velocity comes from implicit differentiation of ``F(i omega, k) = 0``.
    """
    kx, ky = float(k[0]), float(k[1])
    knorm = math.hypot(kx, ky)
    lam = body_wave_eigenvalues(m, (kx, ky))
    if abs(lam[0] - lam[1]) <= 1e-12 * lam[0]:
        raise DegenerateBranch(f"coincident eigenvalues {lam} at k = {(kx, ky)}")
    omega = math.sqrt(lam[_branch_index(branch)])

    # G(w, k) = F(i w, k) = w^4 - a w^2 + b
    rho2 = m.rho * m.rho
    e = m.c11 * m.c22 + m.c33 * m.c33 - (m.c33 + m.c12) ** 2
    a = ((m.c11 + m.c33) * kx * kx + (m.c22 + m.c33) * ky * ky) / m.rho
    dG_dw = 4.0 * omega**3 - 2.0 * a * omega
    w2 = omega * omega
    dG_dkx = -w2 * 2.0 * (m.c11 + m.c33) * kx / m.rho + (
        4.0 * m.c11 * m.c33 * kx**3 + 2.0 * e * kx * ky * ky
    ) / rho2
    dG_dky = -w2 * 2.0 * (m.c22 + m.c33) * ky / m.rho + (
        4.0 * m.c22 * m.c33 * ky**3 + 2.0 * e * kx * kx * ky
    ) / rho2
    vg = (-dG_dkx / dG_dw, -dG_dky / dG_dw)

    vp = (omega / kx if kx != 0.0 else math.inf, omega / ky if ky != 0.0 else math.inf)
    return KinematicQuantities(
        direction=(kx / knorm, ky / knorm),
        omega=omega,
        phase_velocity=vp,
        slowness=(kx / omega, ky / omega),
        group_velocity=vg,
    )


def slowness_curve(m: MaterialParams, n_angles: int = 720) -> list[tuple[float, float, float, str]]:
    """Rows ``(angle, Sx, Sy, branch)`` of the slowness diagram at unit frequency."""
    rows = []
    for branch in ("P", "S"):
        idx = _branch_index(branch)
        for j in range(n_angles):
            theta = 2.0 * math.pi * j / n_angles
            K = (math.cos(theta), math.sin(theta))
            omega = math.sqrt(body_wave_eigenvalues(m, K)[idx])
            rows.append((theta, K[0] / omega, K[1] / omega, branch))
    return rows


@dataclass
class GeometricReport:
    direction: str
    n_angles: int
    flagged: list[tuple[float, str, float]] = field(default_factory=list)
    skipped: list[tuple[float, str]] = field(default_factory=list)
    min_product: float = math.inf

    @property
    def admissible(self) -> bool:
        return not self.flagged

    @property
    def verdict(self) -> str:
        return f"PML-admissible in {self.direction}" if self.admissible else f"unstable in {self.direction}"

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "n_angles": self.n_angles,
            "admissible": self.admissible,
            "verdict": self.verdict,
            "n_flagged": len(self.flagged),
            "min_product": self.min_product,
        }


def geometric_stability_check(m: MaterialParams, n_angles: int = 720, direction: str = "x") -> GeometricReport:
    """Sweep propagation angles and flag branches where phase and group velocity
    components along the PML direction have opposite signs."""
    if n_angles < 4:
        raise ValueError("n_angles must be at least 4")
    axis = {"x": 0, "y": 1}[direction]
    report = GeometricReport(direction, n_angles)
    for j in range(n_angles):
        theta = 2.0 * math.pi * j / n_angles
        K = (math.cos(theta), math.sin(theta))
        if abs(K[axis]) < 1e-12:
            continue
        for branch in ("P", "S"):
            try:
                kin = kinematics(m, K, branch)
            except DegenerateBranch:
                report.skipped.append((theta, branch))
                continue
            prod = kin.phase_velocity[axis] * kin.group_velocity[axis]
            report.min_product = min(report.min_product, prod)
            if prod < 0.0:
                report.flagged.append((theta, branch, prod))
    return report


# ---------------------------------------------------------------------------
# PML stretching


@dataclass(frozen=True)
class PmlStretch:
    sigma: float
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma < 0.0 or self.alpha < 0.0:
            raise ValueError("sigma and alpha must be nonnegative")


def pml_stretch_value(s, stretch: PmlStretch):
    """``Sx = 1 + sigma / (alpha + s)``."""
    if s + stretch.alpha == 0:
        raise PoleAtMinusAlpha(f"s = {s} sits on the pole -alpha")
    return 1.0 + stretch.sigma / (stretch.alpha + s)


# ---------------------------------------------------------------------------
# normal modes at a horizontal interface


@dataclass(frozen=True)
class KappaRootSet:
    minus_roots: np.ndarray  # (2,), Re < 0
    plus_roots: np.ndarray  # (2,), Re > 0
    minus_vectors: np.ndarray  # (2, 2), column j pairs with minus_roots[j]
    plus_vectors: np.ndarray


def modal_matrix(m: MaterialParams, s, kx, kappa) -> np.ndarray:
    """``s^2 I + P(kx, kappa)``."""
    c = coefficient_matrices(m)
    P = (kx * kx * c.A - kappa * kappa * c.B - 1j * kx * kappa * (c.C + c.C.T)) / m.rho
    return s * s * np.eye(2) + P


def kappa_quartic(m: MaterialParams, s, kx) -> np.ndarray:
    """Monic coefficients (highest first) of ``det(rho (s^2 I + P(kx, kappa)))`` in kappa."""
    rs2 = m.rho * s * s
    a1 = rs2 + kx * kx * m.c11
    a2 = rs2 + kx * kx * m.c33
    e = m.c12 + m.c33
    lead = m.c22 * m.c33
    p2 = (kx * kx * e * e - a1 * m.c22 - a2 * m.c33) / lead
    p0 = a1 * a2 / lead
    return np.array([1.0, 0.0, p2, 0.0, p0], dtype=complex)


def _companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of a monic polynomial from the eigenvalues of its companion matrix,
    polished by Newton iteration on the polynomial itself."""
    n = len(coeffs) - 1
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -coeffs[1:]
    comp[1:, :-1] = np.eye(n - 1)
    roots = np.linalg.eigvals(comp)
    deriv = np.polyder(coeffs)
    for _ in range(2):
        p = np.polyval(coeffs, roots)
        dp = np.polyval(deriv, roots)
        ok = dp != 0
        roots[ok] = roots[ok] - p[ok] / dp[ok]
    return roots


def _null_vector(M: np.ndarray) -> np.ndarray:
    _, _, vh = np.linalg.svd(M)
    v = vh[-1].conj()
    return v / v[np.argmax(np.abs(v))]


def _isotropic_vectors(kx, k_s, k_p):
    # shear polarization is orthogonal to (i kx, kappa), pressure polarization parallel to it
    phi_s = np.array([1j * k_s / kx, 1.0], dtype=complex)
    phi_p = np.array([1j * kx / k_p, 1.0], dtype=complex)
    return phi_s, phi_p


def kappa_roots(m: MaterialParams, s, kx, *, method: str = "auto") -> KappaRootSet:
    """Four kappa roots split by the sign of their real part, with eigenvectors.

    ``method`` is ``"closed"`` (isotropic closed forms), ``"companion"`` (general
    quartic) or ``"auto"`` (closed forms when the medium is isotropic).
    """
    s = complex(s)
    kx = complex(kx) if isinstance(kx, complex) else float(kx)
    if method == "auto":
        method = "closed" if m.is_isotropic else "companion"

    if method == "closed":
        if not m.is_isotropic:
            raise ValueError("closed-form roots need an isotropic medium")
        cs2 = m.c33 / m.rho
        cp2 = m.c11 / m.rho
        k_s = cmath.sqrt(kx * kx + s * s / cs2)
        k_p = cmath.sqrt(kx * kx + s * s / cp2)
        for k in (k_s, k_p):
            if abs(k.real) <= SIGN_TOL * max(1.0, abs(k)):
                raise SignClassificationFailure(f"kappa = {k} has vanishing real part")
        minus = np.array([-k_s, -k_p])
        plus = np.array([k_s, k_p])
        if kx != 0:
            vm = np.column_stack(_isotropic_vectors(kx, minus[0], minus[1]))
            vp = np.column_stack(_isotropic_vectors(kx, plus[0], plus[1]))
        else:
            vm = np.column_stack([_null_vector(modal_matrix(m, s, kx, k)) for k in minus])
            vp = np.column_stack([_null_vector(modal_matrix(m, s, kx, k)) for k in plus])
        return KappaRootSet(minus, plus, vm, vp)

    if method != "companion":
        raise ValueError(f"unknown method {method!r}")
    roots = _companion_roots(kappa_quartic(m, s, kx))
    if np.any(np.abs(roots.real) <= SIGN_TOL * np.maximum(1.0, np.abs(roots))):
        raise SignClassificationFailure(f"kappa roots {roots} include a vanishing real part")
    minus = roots[roots.real < 0]
    plus = roots[roots.real > 0]
    if len(minus) != 2 or len(plus) != 2:
        raise SignClassificationFailure(f"kappa roots {roots} do not split two and two")
    # shear-like (larger |kappa|) first, matching the closed-form ordering at large |s|
    minus = minus[np.argsort(-np.abs(minus), kind="stable")]
    plus = plus[np.argsort(-np.abs(plus), kind="stable")]
    vm = np.column_stack([_null_vector(modal_matrix(m, s, kx, k)) for k in minus])
    vp = np.column_stack([_null_vector(modal_matrix(m, s, kx, k)) for k in plus])
    return KappaRootSet(minus, plus, vm, vp)


@dataclass(frozen=True)
class InterfaceSystem:
    """Two half-planes: ``top`` fills y > 0 and ``bottom`` fills y < 0."""

    top: MaterialParams
    bottom: MaterialParams

    @property
    def c_ref(self) -> float:
        return max(wave_speeds(self.top).cp_max, wave_speeds(self.bottom).cp_max)


def stretched_wavenumber(s, kx, stretch: PmlStretch | None):
    if stretch is None:
        return kx
    sx = pml_stretch_value(s, stretch)
    if sx == 1:
        return kx
    return kx / sx


def interface_matrix(system: InterfaceSystem, s, kx, stretch: PmlStretch | None = None) -> np.ndarray:
    """The 4x4 matrix whose null vectors are interface modes.

    Rows 1-2 impose displacement continuity, rows 3-4 traction continuity.
    """
    k = stretched_wavenumber(s, kx, stretch)
    r1 = kappa_roots(system.top, s, k)
    r2 = kappa_roots(system.bottom, s, k)
    c1 = coefficient_matrices(system.top)
    c2 = coefficient_matrices(system.bottom)
    cols = []
    for j in range(2):
        phi = r1.minus_vectors[:, j]
        trac = (r1.minus_roots[j] * c1.B + 1j * k * c1.C.T) @ phi
        cols.append(np.concatenate([phi, trac]))
    for j in range(2):
        phi = r2.plus_vectors[:, j]
        trac = (r2.plus_roots[j] * c2.B + 1j * k * c2.C.T) @ phi
        cols.append(-np.concatenate([phi, trac]))
    return np.column_stack(cols)


def interface_determinant(system: InterfaceSystem, s, kx, stretch: PmlStretch | None = None) -> complex:
    return complex(np.linalg.det(interface_matrix(system, s, kx, stretch)))


def _golden_min(f, a: float, b: float, c: float, xtol: float) -> float:
    """Golden-section refinement of a bracketed minimum ``f(b) <= f(a), f(c)``."""
    res = optimize.minimize_scalar(f, bracket=(a, b, c), method="golden", options={"xtol": xtol})
    x = float(res.x)
    return x if a <= x <= c else b


def interface_root_search(
    system: InterfaceSystem,
    kx: float,
    xi_range: tuple[float, float],
    n_scan: int = 2001,
    threshold: float = 1e-4,
) -> list[float]:
    """Real xi where ``F(i xi + eps, kx)`` nearly vanishes (interface waves).

    Returns an empty list when the medium supports no interface wave.
    """
    if kx == 0:
        raise ValueError("kx must be nonzero")
    eps = IMAG_AXIS_OFFSET * abs(kx) * system.c_ref

    def mag(xi: float) -> float:
        try:
            return abs(interface_determinant(system, complex(eps, xi), kx))
        except SignClassificationFailure:
            return math.nan

    # branch points (a kappa root vanishes) and xi = 0 (repeated roots) make the
    # modal basis degenerate; the determinant vanishes there without a mode
    speeds = []
    for m in (system.top, system.bottom):
        ws = wave_speeds(m)
        speeds += [ws.csx, ws.cpx]
    branch_points = np.array([0.0] + [c * abs(kx) for c in speeds])

    def degenerate(xi: float) -> bool:
        return bool(np.any(np.abs(abs(xi) - branch_points) <= 1e-6 * system.c_ref * abs(kx)))

    xs = np.linspace(xi_range[0], xi_range[1], n_scan)
    vals = np.array([mag(x) for x in xs])
    finite = np.isfinite(vals)
    if not finite.any():
        return []
    vmax = float(np.max(vals[finite]))
    roots = []
    step = xs[1] - xs[0]
    for i in range(1, n_scan - 1):
        if not (finite[i - 1] and finite[i] and finite[i + 1]):
            continue
        if vals[i] < vals[i - 1] and vals[i] <= vals[i + 1]:
            x = _golden_min(lambda t: mag(t), xs[i - 1], xs[i], xs[i + 1], xtol=1e-12)
            fx = mag(x)
            if math.isfinite(fx) and fx / vmax < threshold and not degenerate(x):
                roots.append(x)
    # guard against one root reported from two neighbouring cells
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 2 * step:
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# PML root movement


def pml_root_map(xi: float, sigma: float, alpha: float) -> tuple[complex, complex]:
    """Both roots of ``s^2 + (alpha + sigma - i xi) s - i alpha xi = 0``.

    These are the frequencies to which an interface mode ``s = i xi`` moves under a
    PML with damping ``sigma`` and frequency shift ``alpha``.
    """
    if sigma < 0 or alpha < 0:
        raise ValueError("sigma and alpha must be nonnegative")
    b = complex(alpha + sigma, -xi)
    c = complex(0.0, -alpha * xi)
    d = cmath.sqrt(b * b - 4.0 * c)
    if (b.conjugate() * d).real < 0:
        d = -d
    q = -0.5 * (b + d)
    if q == 0:
        return 0j, 0j
    return q, c / q


def pml_root_is_spurious(s: complex, alpha: float, tol: float = 1e-14) -> bool:
    """True for the root ``s = -alpha`` introduced by clearing the PML pole."""
    return abs(s + alpha) <= tol * max(1.0, abs(s))


# ---------------------------------------------------------------------------
# PML plane-wave dispersion


def pml_dispersion_F(m: MaterialParams, lam, K, eps: float, nu: float):
    """``F(lam, K1 / Sx, K2)`` with ``Sx = 1 + eps / (lam + nu)`` in normalized variables."""
    k1, k2 = K
    if abs(math.hypot(k1, k2) - 1.0) > 1e-12:
        raise ValueError("K must be a unit vector")
    if eps == 0:
        return dispersion_F(m, lam, k1, k2)
    if np.any(lam + nu == 0):
        raise PoleAtMinusAlpha("lambda sits on the pole -nu")
    sx = 1.0 + eps / (lam + nu)
    return dispersion_F(m, lam, k1 / sx, k2)


def pml_dispersion_polynomial(m: MaterialParams, K, eps: float, nu: float) -> np.ndarray:
    """Coefficients of ``(lam + nu + eps)^4 F_eps(lam, K)``, a degree-8 polynomial."""
    k1, k2 = K
    P = np.polynomial.polynomial
    num = np.array([nu, 1.0])  # lam + nu
    den = np.array([nu + eps, 1.0])  # lam + nu + eps
    lam = np.array([0.0, 1.0])
    e = m.c11 * m.c22 + m.c33 * m.c33 - (m.c33 + m.c12) ** 2
    a1 = (m.c11 + m.c33) / m.rho
    a2 = (m.c22 + m.c33) / m.rho
    b1 = m.c11 * m.c33 / m.rho**2
    b2 = m.c22 * m.c33 / m.rho**2
    g = e / m.rho**2
    D2 = P.polypow(den, 2)
    D4 = P.polypow(den, 4)
    N2 = P.polypow(num, 2)
    N4 = P.polypow(num, 4)
    lam2 = P.polypow(lam, 2)
    lam4 = P.polypow(lam, 4)
    terms = [
        P.polymul(D4, lam4),
        P.polymul(lam2, a1 * k1 * k1 * P.polymul(N2, D2) + a2 * k2 * k2 * D4),
        b1 * k1**4 * N4,
        b2 * k2**4 * D4,
        g * k1 * k1 * k2 * k2 * P.polymul(N2, D2),
    ]
    out = np.zeros(9)
    for t in terms:
        out[: len(t)] += t
    return out  # lowest degree first


def pml_dispersion_roots(m: MaterialParams, K, eps: float, nu: float) -> np.ndarray:
    if eps == 0:
        coeffs = np.zeros(5)
        k1, k2 = K
        a = ((m.c11 + m.c33) * k1 * k1 + (m.c22 + m.c33) * k2 * k2) / m.rho
        e = m.c11 * m.c22 + m.c33 * m.c33 - (m.c33 + m.c12) ** 2
        b = (m.c11 * m.c33 * k1**4 + m.c22 * m.c33 * k2**4 + e * k1 * k1 * k2 * k2) / m.rho**2
        coeffs[:] = [b, 0.0, a, 0.0, 1.0]
        return np.polynomial.polynomial.polyroots(coeffs)
    return np.polynomial.polynomial.polyroots(pml_dispersion_polynomial(m, K, eps, nu))


def _winding(values: np.ndarray) -> int:
    phase = np.unwrap(np.angle(values))
    return int(round((phase[-1] - phase[0]) / (2.0 * np.pi)))


def count_right_half_plane_roots(
    m: MaterialParams,
    K,
    eps: float,
    nu: float,
    radius: float | None = None,
    offset: float = 1e-9,
    n_points: int = 20000,
) -> int:
    """Winding number of ``F_eps(., K)`` around the half disc ``Re(lam) > offset``.

    The imaginary-axis leg is refined geometrically towards ``lam = 0``, where
    ``eps / (lam + nu)`` varies fastest when ``nu`` is small.
    """
    if radius is None:
        radius = 4.0 * (max(m.c11, m.c22) / m.rho) ** 0.5 + 4.0 * eps + 1.0
    n_line = n_points // 2
    near = np.geomspace(offset, radius, n_line // 4)
    t = np.unique(np.concatenate([np.linspace(-radius, radius, n_line // 2), near, -near, [0.0]]))[::-1]
    line = offset + 1j * t
    theta = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n_points - n_line)
    arc = offset + radius * np.exp(1j * theta)
    contour = np.concatenate([line, arc[1:], line[:1]])
    return _winding(pml_dispersion_F(m, contour, K, eps, nu))


def sign_change_cells(
    m: MaterialParams,
    K,
    eps: float,
    nu: float,
    re_max: float,
    im_max: float,
    n: int = 200,
    re_min: float = 1e-6,
) -> int:
    """Cells of an ``n x n`` grid on ``[re_min, re_max] x [-im_max, im_max]`` holding a root.

    Cells where both the real and imaginary parts of ``F_eps`` change sign at
    the corners are candidates; a candidate counts only when a root of the
    cleared polynomial lies inside it (roots just left of the axis make
    neighbouring cells change sign without holding a root).
    """
    re = np.linspace(re_min, re_max, n + 1)
    im = np.linspace(-im_max, im_max, n + 1)
    lam = re[None, :] + 1j * im[:, None]
    F = pml_dispersion_F(m, lam, K, eps, nu)

    def changes(x: np.ndarray) -> np.ndarray:
        sg = np.sign(x)
        quad = np.stack([sg[:-1, :-1], sg[1:, :-1], sg[:-1, 1:], sg[1:, 1:]])
        return quad.max(axis=0) != quad.min(axis=0)

    roots = pml_dispersion_roots(m, K, eps, nu)
    count = 0
    for i, j in zip(*np.nonzero(changes(F.real) & changes(F.imag))):
        inside = (roots.real >= re[j]) & (roots.real <= re[j + 1]) & (roots.imag >= im[i]) & (roots.imag <= im[i + 1])
        count += bool(inside.any())
    return count
