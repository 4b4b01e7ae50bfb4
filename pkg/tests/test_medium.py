import math

import numpy as np
import pytest
from hypothesis import given, settings

from elastic_pml.medium import (
    EllipticityViolation,
    MaterialError,
    NonPositiveDensity,
    coefficient_matrices,
    impedance_matrix,
    isotropic_from_speeds,
    make_isotropic,
    make_orthotropic,
    material_from_dict,
    strain_energy_matrix,
    wave_speeds,
)

from conftest import ISO_BOTTOM, ISO_TOP, orthotropic_params


def test_orthotropic_scenario_medium_is_valid():
    m = make_orthotropic(1, 4, 20, 2, 3.8)
    assert (m.c11, m.c22, m.c33, m.c12) == (4.0, 20.0, 2.0, 3.8)


def test_diagonal_medium_is_valid():
    make_orthotropic(1, 1, 1, 1, 0)


def test_ellipticity_violation():
    with pytest.raises(EllipticityViolation):
        make_orthotropic(1, 1, 1, 1, 2)


@pytest.mark.parametrize("rho", [0.0, -1.0])
def test_nonpositive_density(rho):
    with pytest.raises(NonPositiveDensity):
        make_orthotropic(rho, 1, 1, 1, 0)


def test_nonfinite_rejected():
    with pytest.raises(MaterialError):
        make_orthotropic(1, math.nan, 1, 1, 0)


def test_isotropic_boundary_case_rejected():
    # c11 c22 - c12^2 = 0 exactly
    with pytest.raises(EllipticityViolation):
        make_isotropic(1, 1, -1)


@pytest.mark.parametrize("params,cs,cp", [(ISO_TOP, 1.8, 3.118), (ISO_BOTTOM, 3.0, 5.196)])
def test_isotropic_speeds_from_lame(params, cs, cp):
    w = wave_speeds(make_isotropic(*params))
    assert w.csx == pytest.approx(cs, abs=1e-3)
    assert w.cpx == pytest.approx(cp, abs=1e-3)
    assert w.cpx == w.cpy and w.csx == w.csy


def test_speed_round_trip():
    w = wave_speeds(isotropic_from_speeds(1.9, 2.3, 3.984))
    assert np.allclose([w.cpx, w.csx, w.cpy, w.csy], [3.984, 2.3, 3.984, 2.3], atol=1e-3)


def test_orthotropic_speeds():
    w = wave_speeds(make_orthotropic(1, 4, 20, 2, 3.8))
    assert (w.cpx, w.csx, w.cpy, w.csy) == (2.0, math.sqrt(2), math.sqrt(20), math.sqrt(2))


def test_stiffness_scaling_doubles_speeds():
    m = make_orthotropic(1, 4, 20, 2, 3.8)
    a, b = wave_speeds(m), wave_speeds(m.scaled(stiffness=4.0))
    assert np.allclose([b.cpx, b.csx, b.cpy, b.csy], [2 * a.cpx, 2 * a.csx, 2 * a.cpy, 2 * a.csy], rtol=1e-15)


def test_coefficient_matrices_layout():
    c = coefficient_matrices(make_orthotropic(1, 4, 20, 2, 3.8))
    assert np.array_equal(c.A, [[4, 0], [0, 2]])
    assert np.array_equal(c.B, [[2, 0], [0, 20]])
    assert np.array_equal(c.C, [[0, 3.8], [2, 0]])


def test_strain_energy_matrix_unit_lame():
    P = strain_energy_matrix(make_isotropic(1, 1, 1))
    assert np.array_equal(np.diag(P), [3, 1, 1, 3])
    assert np.array_equal(P[:2, 2:], [[0, 1], [1, 0]])


def test_strain_energy_psd_for_scenario_pair():
    for params in (ISO_TOP, ISO_BOTTOM):
        P = strain_energy_matrix(make_isotropic(*params))
        assert np.linalg.eigvalsh(P).min() >= -1e-12 * np.abs(P).max()


def test_impedance_reduces_on_axes():
    m = make_orthotropic(1, 4, 20, 2, 3.8)
    w = wave_speeds(m)
    assert np.allclose(impedance_matrix(m, 1, 0), np.diag([w.cpx, w.csx]))
    assert np.allclose(impedance_matrix(m, 0, -1), np.diag([w.csy, w.cpy]))


def test_material_from_dict_forms():
    a = material_from_dict({"type": "isotropic", "rho": 1.5, "mu": 4.86, "lambda": 4.8629})
    b = material_from_dict({"type": "isotropic", "rho": 1.5, "cs": 1.8, "cp": 3.118})
    assert a.c33 == 4.86
    assert b.c33 == pytest.approx(4.86)
    assert material_from_dict(a.to_dict()) == a
    with pytest.raises(MaterialError):
        material_from_dict({"type": "isotropic", "rho": 1})
    with pytest.raises(MaterialError):
        material_from_dict({"type": "crystal"})


@settings(max_examples=1000, deadline=None)
@given(orthotropic_params())
def test_strain_energy_matrix_psd_and_symmetric(p):
    m = make_orthotropic(*p)
    P = strain_energy_matrix(m)
    assert np.array_equal(P, P.T)
    assert np.linalg.eigvalsh(P).min() >= -1e-12 * np.linalg.norm(P)
    w = wave_speeds(m)
    assert min(w.cpx, w.csx, w.cpy, w.csy) > 0


@settings(max_examples=200, deadline=None)
@given(orthotropic_params())
def test_isotropic_constants_exact(p):
    rho, _, _, mu, _ = p
    lam = mu * 0.5
    m = make_isotropic(rho, mu, lam)
    assert m.c11 == m.c22 and m.c33 == mu and m.c12 == lam
    assert m.is_isotropic
