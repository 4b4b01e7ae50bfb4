import math

import numpy as np
import pytest

from elastic_pml import solver
from elastic_pml.curvilinear import rectangle_grid
from elastic_pml.medium import isotropic_from_speeds, make_isotropic
from elastic_pml.solver import (
    RK4,
    U,
    UT,
    V,
    W,
    ConfigurationError,
    Discretization,
    InstabilityDetected,
    LayerSpec,
    MaterialField,
    PmlProfile,
    SimulationState,
    damping_strength,
    integrate,
)
from elastic_pml.sources import MomentSource, gaussian_initial_data, moment_time_function

from conftest import ISO_BOTTOM, ISO_TOP

PI = math.pi


def two_layer(n=21, pml=(), **kw):
    g1 = rectangle_grid(0, 2, 0, 1, n, n)
    g2 = rectangle_grid(0, 2, -1, 0, n, n)
    return Discretization([LayerSpec(g1, make_isotropic(*ISO_TOP)), LayerSpec(g2, make_isotropic(*ISO_BOTTOM))], pml=pml, **kw)


def right_pml(alpha_ratio=0.05, sigma0=None):
    p = PmlProfile.from_reflection(1.6, 0.4, 5.196, 1e-4, alpha_ratio)
    if sigma0 is not None:
        p = PmlProfile(p.L, p.delta, sigma0, p.alpha)
    return p


class Scalar:
    """u' = -u as a one-unknown system for the RK4 stepper."""

    size = 1

    def rhs(self, t, Y, out=None):
        out = np.empty_like(Y) if out is None else out
        out[:] = -Y
        return out


def test_damping_strength_scenario_value():
    cp = math.sqrt((2 * 27 + 26.9952) / 3)
    assert cp == pytest.approx(5.196, abs=1e-3)
    s0 = damping_strength(cp, 0.4 * PI, 1e-4)
    assert s0 == pytest.approx(4 * cp / (0.8 * PI) * math.log(1e4), rel=1e-14)
    assert s0 == pytest.approx(76.1666, abs=1e-3)
    with pytest.raises(ConfigurationError):
        damping_strength(1.0, 1.0, 1.5)


def test_profile_ramp():
    p = PmlProfile(L=1.0, delta=0.5, sigma0=8.0, alpha=0.4)
    assert np.allclose(p.sigma([0.5, 1.0, 1.25, 1.5]), [0, 0, 1.0, 8.0])
    left = PmlProfile(L=0.0, delta=1.0, sigma0=2.0, side=-1)
    assert np.allclose(left.sigma([-1.0, 0.0, 1.0]), [2.0, 0.0, 0.0])
    with pytest.raises(ConfigurationError):
        PmlProfile(1.0, 0.0, 1.0)
    with pytest.raises(ConfigurationError):
        PmlProfile(1.0, 1.0, 1.0, direction="z")


def test_configuration_errors():
    g = rectangle_grid(0, 1, 0, 1, 13, 13)
    m = make_isotropic(1, 1, 1)
    with pytest.raises(ConfigurationError):
        Discretization([])
    with pytest.raises(ConfigurationError):
        Discretization([LayerSpec(g, m)], boundaries={"left": "rigid"})
    with pytest.raises(ConfigurationError):
        Discretization([LayerSpec(g, m)], dissipation=-1.0)
    with pytest.raises(ConfigurationError):
        Discretization([LayerSpec(g, m)], pml=[PmlProfile(0.5, 0.5, 1.0, 0.1), PmlProfile(0.5, 0.5, 1.0, 0.2)])
    with pytest.raises(ConfigurationError):
        Discretization([LayerSpec(g, m), LayerSpec(rectangle_grid(0, 1, -1, 0, 15, 13), m)])
    with pytest.raises(ConfigurationError):
        # the layers do not touch
        Discretization([LayerSpec(g, m), LayerSpec(rectangle_grid(0, 1, -2, -1, 13, 13), m)])
    with pytest.raises(ConfigurationError):
        MaterialField(*(np.ones((2, 2)) for _ in range(4)), c12=2 * np.ones((2, 2)))


def test_zero_state_zero_rhs():
    for pml in ((), (right_pml(),)):
        disc = two_layer(pml=pml)
        assert not disc.rhs(0.0, disc.zeros()).any()


def test_undamped_profile_matches_elastic_rhs_bitwise():
    rng = np.random.default_rng(0)
    plain = two_layer()
    damped = two_layer(pml=(right_pml(alpha_ratio=0.0, sigma0=0.0),))
    for _ in range(5):
        Y = damped.zeros()
        for k in range(2):
            v = damped.view(Y, k)
            v[U] = rng.normal(size=v[U].shape)
            v[UT] = rng.normal(size=v[UT].shape)
        Yp = np.concatenate([damped.view(Y, k)[:2].ravel() for k in range(2)])
        a = plain.rhs(0.0, Yp)
        b = damped.rhs(0.0, Y)
        for k in range(2):
            assert np.array_equal(plain.view(a, k), damped.view(b, k)[:2])
            # auxiliary fields stay zero from zero data without damping
            assert not damped.view(b, k)[2:].any()


def test_auxiliary_equations_inside_layer():
    disc = two_layer(pml=(right_pml(),))
    Y = disc.zeros()
    lay = disc.layers[0]
    g = lay.spec.grid
    disc.view(Y, 0)[U] = np.array([g.x**2, 0 * g.x])
    disc.view(Y, 0)[V] = 1.0
    d = disc.view(disc.rhs(0.0, Y), 0)
    inside = lay.sx > 0
    expect = (lay.Dq.apply(g.x**2, -1) * lay.qx - (disc.alpha + lay.sx))[inside]
    assert np.allclose(d[V][0][inside], expect, rtol=1e-13)
    assert not d[V][:, ~inside].any() and not d[W][:, ~inside].any()


def test_corner_reduction_bitwise():
    x_only = two_layer(pml=(right_pml(),), mode="x")
    corner = two_layer(pml=(right_pml(),), mode="xy")
    rng = np.random.default_rng(1)
    for _ in range(10):
        Y = x_only.zeros()
        Y[:] = rng.normal(size=Y.size)
        Yc = corner.zeros()
        for k in range(2):
            corner.view(Yc, k)[:5] = x_only.view(Y, k)
            corner.view(Yc, k)[5] = rng.normal(size=corner.view(Yc, k)[5].shape)
        a, b = x_only.rhs(0.0, Y), corner.rhs(0.0, Yc)
        for k in range(2):
            assert np.array_equal(x_only.view(a, k), corner.view(b, k)[:5])


def test_rk4_scalar_local_error():
    errs = []
    for dt in (0.1, 0.05, 0.025):
        Y = np.array([1.0])
        RK4(Scalar()).step(0.0, Y, dt)
        errs.append(abs(Y[0] - math.exp(-dt)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 4.8)


def test_rk4_step_state_api():
    disc = two_layer(n=13)
    st = SimulationState.zeros(disc)
    st.layer(0)[U] = gaussian_initial_data(disc.layers[0].spec.grid.x, disc.layers[0].spec.grid.y, (1.0, 0.5), 20.0)
    new = solver.rk4_step(st, disc.stable_dt())
    assert new.t == pytest.approx(disc.stable_dt()) and st.t == 0.0
    assert solver.energy_norm(new) > 0 and solver.mechanical_energy(new) > 0
    with pytest.raises(ValueError):
        solver.rk4_step(st, 0.0)
    bad = st.copy()
    bad.data[0] = np.nan
    with pytest.raises(InstabilityDetected):
        solver.rk4_step(bad, 0.01)


def test_temporal_convergence():
    # fixed grid, dt halving: fourth order until spatial error takes over
    m = isotropic_from_speeds(1.0, 1.0, 2.0)
    g = rectangle_grid(0, 1, 0, 1, 16, 16, periodic_x=True, periodic_y=True)
    disc = Discretization([LayerSpec(g, m)], periodic_x=True, periodic_y=True, dissipation=0.0)
    Y0 = disc.zeros()
    disc.view(Y0, 0)[U] = np.array([np.sin(2 * PI * g.x) * np.cos(2 * PI * g.y), 0 * g.x])

    def run(nsteps):
        Y = Y0.copy()
        st = RK4(disc)
        dt = 0.2 / nsteps
        for j in range(nsteps):
            st.step(j * dt, Y, dt)
        return Y

    ref = run(640)
    errs = [np.abs(run(n) - ref).max() for n in (10, 20, 40)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.8), rates


def test_energy_norm_of_constant_field():
    disc = two_layer(n=17)
    Y = disc.zeros()
    for k in range(2):
        disc.view(Y, k)[U] = 1.0
    assert disc.energy_norm(Y) == pytest.approx(math.sqrt(2 * 4.0), rel=1e-12)
    assert disc.energy_norm(disc.zeros()) == 0.0
    assert disc.mechanical_energy(disc.zeros()) == 0.0


def test_characteristic_energy_non_increasing():
    disc = two_layer(n=13, dissipation=0.0)
    Y = disc.zeros()
    for k in range(2):
        g = disc.layers[k].spec.grid
        disc.view(Y, k)[U] = gaussian_initial_data(g.x, g.y, (1.0, 0.1), 8.0)
    st = RK4(disc)
    dt = disc.stable_dt()
    E = [disc.mechanical_energy(Y)]
    for j in range(10_000):
        st.step(j * dt, Y, dt)
        if j % 50 == 49:
            E.append(disc.mechanical_energy(Y))
    E = np.array(E)
    assert np.all(np.diff(E) <= 1e-12 * E[0])
    assert E[-1] < 0.1 * E[0]


def test_dissipation_never_adds_energy():
    base = two_layer(n=17, dissipation=0.0)
    diss = two_layer(n=17, dissipation=0.02)
    rng = np.random.default_rng(2)
    for _ in range(5):
        Y = rng.normal(size=base.size)
        # energy rate of the dissipation term alone: <u_t, rho J H d(u_t)>
        a, b = base.rhs(0.0, Y), diss.rhs(0.0, Y)
        rate = 0.0
        for k in range(2):
            lay = base.layers[k]
            w = base.weights(k) * lay.rho
            rate += float(np.sum(w * base.view(Y, k)[UT] * (diss.view(b, k)[UT] - base.view(a, k)[UT])))
        assert rate <= 1e-12


def test_two_layer_patch():
    # u = (0, a_k y) with c22 a_1 = c22' a_2 is a steady state near the interface
    m1, m2 = make_isotropic(*ISO_TOP), make_isotropic(*ISO_BOTTOM)
    disc = two_layer(n=25, dissipation=0.0, periodic_x=False)
    a1 = 1.0
    a2 = m1.c22 / m2.c22
    Y = disc.zeros()
    for k, a in ((0, a1), (1, a2)):
        g = disc.layers[k].spec.grid
        disc.view(Y, k)[U][1] = a * g.y
    d = disc.rhs(0.0, Y)
    top = disc.view(d, 0)[UT][:, :8, 2:-2]
    bottom = disc.view(d, 1)[UT][:, -8:, 2:-2]
    assert np.abs(top).max() <= 1e-10 and np.abs(bottom).max() <= 1e-10


def test_spatial_convergence_two_layer():
    # standing P mode u_y = cos(pi y) cos(pi cp t) on y in [-1, 1], traction-free
    # top and bottom, split into two layers of the same medium at y = 0
    m = isotropic_from_speeds(1.0, 1.0, 2.0)
    T = 0.5
    errs = []
    for n in (17, 33, 65):
        g1 = rectangle_grid(0, 1, 0, 1, 16, n, periodic_x=True)
        g2 = rectangle_grid(0, 1, -1, 0, 16, n, periodic_x=True)
        disc = Discretization(
            [LayerSpec(g1, m), LayerSpec(g2, m)],
            boundaries={"top": "traction-free", "bottom": "traction-free"},
            periodic_x=True,
            dissipation=0.0,
        )
        Y = disc.zeros()
        for k in range(2):
            disc.view(Y, k)[U][1] = np.cos(PI * disc.layers[k].spec.grid.y)
        integrate(disc, Y, 0.0, T, 0.5 * disc.stable_dt(), T, lambda t, Y: None)
        E = disc.zeros()
        for k in range(2):
            g = disc.layers[k].spec.grid
            disc.view(E, k)[U][1] = disc.view(Y, k)[U][1] - np.cos(PI * g.y) * math.cos(2 * PI * T)
        errs.append(disc.energy_norm(E))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= 3.0), (errs, rates)


def test_integrate_hits_output_times():
    disc = two_layer(n=13)
    Y = disc.zeros()
    times = []
    dt = integrate(disc, Y, 0.0, 0.3, 1.0, 0.1, lambda t, Y: times.append(t))
    assert np.allclose(times, [0, 0.1, 0.2, 0.3]) and dt <= 0.1
    with pytest.raises(ConfigurationError):
        integrate(disc, Y, 1.0, 0.5, 0.1, 0.1, lambda t, Y: None)


def test_gaussian_initial_data():
    x = np.array([2 * PI, 2 * PI + 0.1])
    y = np.array([1.6 * PI, 1.6 * PI])
    u = gaussian_initial_data(x, y, (2 * PI, 1.6 * PI), 20.0)
    assert u.shape == (2, 2) and u[0, 0] == 1.0 and u[1, 0] == 1.0
    assert u[0, 1] == pytest.approx(math.exp(-0.2))
    assert gaussian_initial_data(np.array([20.0]), np.array([-15.0]), (20, -15))[0, 0] == 1.0


def test_moment_source():
    assert moment_time_function(0.215) == 1.0
    src = MomentSource.from_spacing([(20.0, -15.0)], h=0.4)
    assert (src.s1, src.s2, src.M0) == (0.2, 0.2, 1000.0)
    assert np.all(src.grad_delta(np.array(20.0), np.array(-15.0)) == 0)
    # closed-form gradient against central differences
    x, y, h = np.array(20.13), np.array(-15.07), 1e-6
    fd = [(src.delta(x + h, y) - src.delta(x - h, y)) / (2 * h), (src.delta(x, y + h) - src.delta(x, y - h)) / (2 * h)]
    assert np.allclose(src.grad_delta(x, y), fd, rtol=1e-6)
    assert np.allclose(src(0.215, x, y), 1000 * src.grad_delta(x, y))
    with pytest.raises(ValueError):
        MomentSource(((0.0, 0.0),), 0.0, 1.0)


def test_heterogeneous_layer_matches_constant():
    m = make_isotropic(*ISO_TOP)
    g = rectangle_grid(0, 2, 0, 1, 17, 15)
    f = MaterialField(*(np.full(g.shape, v) for v in (m.rho, m.c11, m.c22, m.c33, m.c12)))
    a = Discretization([LayerSpec(g, m)])
    b = Discretization([LayerSpec(g, f)])
    assert b.heterogeneous and not a.heterogeneous
    Y = np.random.default_rng(3).normal(size=a.size)
    ra, rb = a.rhs(0.0, Y), b.rhs(0.0, Y)
    assert np.allclose(ra, rb, rtol=1e-12, atol=1e-12 * np.abs(ra).max())
