import math

import numpy as np
import pytest
from scipy.optimize import fsolve

from qssa_lab import (EquilibriumKind, ParameterError, ParameterFamily, RateParameters,
                      Trajectory, classify_parameter_point, equilibrium, jacobian, ray_scale,
                      recover_full_state, rhs, vector_field)
from qssa_lab.model import is_degenerate


def test_rhs_at_origin(base):
    assert np.allclose(rhs(base, (0.0, 0.0)), [2.5, 0.0])


def test_rhs_vanishes_at_equilibrium(base):
    assert np.allclose(rhs(base, (20.0, 5 / 6)), [0.0, 0.0], atol=1e-14)


def test_closed_system_origin_is_stationary():
    p = RateParameters(0.0, 1.0, 2.0, 0.5, 1.5)
    assert np.array_equal(rhs(p, (0.0, 0.0)), [0.0, 0.0])


def test_rhs_vectorised(base):
    s = np.linspace(0, 10, 7)
    c = np.linspace(0, 1, 7)
    out = rhs(base, (s, c))
    assert out.shape == (2, 7)
    for i in range(7):
        assert np.allclose(out[:, i], rhs(base, (s[i], c[i])))


def test_vector_field_signature(base):
    f = vector_field(base)
    assert np.allclose(f(0.0, [1.0, 0.2]), rhs(base, (1.0, 0.2)))


def test_jacobian_matches_finite_differences(base):
    x = np.array([3.0, 0.4])
    h = 1e-6
    fd = np.column_stack([(rhs(base, x + h * e) - rhs(base, x - h * e)) / (2 * h)
                          for e in np.eye(2)])
    assert np.allclose(jacobian(base, x), fd, atol=1e-8)


def test_equilibrium_against_root_finder(base):
    # independent oracle: generic 2-D root finder on the vector field
    root = fsolve(lambda y: rhs(base, y), [19.0, 0.8], xtol=1e-12)
    eq = equilibrium(base)
    assert eq.s_hat == pytest.approx(root[0], abs=1e-10)
    assert eq.c_hat == pytest.approx(root[1], abs=1e-12)
    assert (eq.s_hat, eq.c_hat) == pytest.approx((20.0, 5 / 6), abs=1e-12)


def test_equilibrium_eigenvalues_frozen(base):
    # reference values from a 30-digit eigen-solve of the Jacobian at (20, 5/6)
    eq = equilibrium(base)
    assert eq.eigenvalues == pytest.approx((-24.1459592681969542, -0.0207073984697124), rel=1e-12)


def test_saddle_in_second_quadrant(unbounded):
    eq = equilibrium(unbounded)
    assert eq.kind is EquilibriumKind.SADDLE_SECOND_QUADRANT
    assert (eq.s_hat, eq.c_hat) == pytest.approx((-28.0, 7 / 6))


@pytest.mark.parametrize("values", [(0, 0, 1, 3, 1), (0, 1, 0, 1, 1), (0, 1, 1, 1, 0)])
def test_degenerate_families(values):
    p = RateParameters(*values)
    assert is_degenerate(p)
    assert equilibrium(p).kind is EquilibriumKind.DEGENERATE_FAMILY


def test_balanced_case_has_no_finite_equilibrium():
    eq = equilibrium(RateParameters(3.0, 1.0, 1.0, 1.0, 3.0))
    assert eq.kind is EquilibriumKind.NONE_AT_INFINITY_BALANCE
    assert math.isnan(eq.s_hat)


def test_no_equilibrium_without_binding():
    assert equilibrium(RateParameters(1.0, 1.0, 0.0, 1.0, 1.0)) is None


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf, "x"])
def test_parameter_validation(bad):
    with pytest.raises(ParameterError):
        RateParameters(bad, 1.0, 1.0, 1.0, 1.0)


def test_json_dict_round_trip(base):
    d = base.to_dict()
    assert list(d) == ["k0", "eT", "k1", "km1", "k2"]
    assert RateParameters.from_dict(d) == base
    with pytest.raises(ParameterError):
        RateParameters.from_dict({"k0": 1})
    with pytest.raises(ParameterError):
        RateParameters.from_dict({**d, "k3": 1})


def test_derived_constants(base):
    assert base.K_M == 4.0
    assert base.K_S == base.K_E == 1.0
    assert base.v_max == 3.0
    assert base.alpha == pytest.approx(5 / 6)


@pytest.mark.parametrize("values, expected", [
    ((0, 0, 1, 1, 3), {ParameterFamily.TFPV_K0_ET, ParameterFamily.QSSPV_ET}),
    ((0, 1, 1, 1, 0), {ParameterFamily.TFPV_K0_K2, ParameterFamily.QSSPV_K0_K2}),
    ((2.5, 1, 1, 1, 3), {ParameterFamily.GENERIC}),
    ((0, 1, 0, 1, 3), {ParameterFamily.TFPV_K0_K1, ParameterFamily.QSSPV_K1}),
    ((1, 1, 1, 0, 0), {ParameterFamily.QSSPV_KM1_K2}),
])
def test_classify_parameter_point(values, expected):
    assert set(classify_parameter_point(RateParameters(*values))) == expected


def test_classification_uses_same_unit_scale():
    # k2 tiny relative to k_m1 counts as zero; e_T has no partner so it must be exactly zero
    p = RateParameters(0.0, 1.0, 1.0, 1.0, 1e-14)
    assert ParameterFamily.TFPV_K0_K2 in classify_parameter_point(p)
    p = RateParameters(0.0, 1e-14, 1.0, 1.0, 3.0)
    assert ParameterFamily.TFPV_K0_ET not in classify_parameter_point(p)
    ref = RateParameters(2.5, 1.0, 1.0, 1.0, 3.0)
    assert ParameterFamily.TFPV_K0_ET in classify_parameter_point(
        RateParameters(1e-14, 1e-14, 1.0, 1.0, 3.0), reference=ref)


def test_ray_scale(base):
    assert ray_scale(base, ParameterFamily.TFPV_K0_ET, 0.1).as_tuple() == pytest.approx(
        (0.25, 0.1, 1, 1, 3))
    assert ray_scale(base, ParameterFamily.TFPV_K0_K2, 0.0).as_tuple() == (0, 1, 1, 1, 0)
    assert ray_scale(base, ParameterFamily.TFPV_K0_K1, 0.5).as_tuple() == (1.25, 1, 0.5, 1, 3)
    with pytest.raises(ParameterError):
        ray_scale(base, ParameterFamily.QSSPV_ET, 0.5)
    with pytest.raises(ParameterError):
        ray_scale(base, ParameterFamily.TFPV_K0_ET, -0.1)


def test_recover_full_state_constant_complex(base):
    t = np.linspace(0.0, 2.0, 11)
    traj = Trajectory(t, np.column_stack([np.ones_like(t), np.full_like(t, 0.3)]))
    full = recover_full_state(base, traj, p0=1.0)
    assert full.names == ("s", "e", "c", "p")
    assert np.allclose(full["e"], 0.7)
    assert full["p"][-1] == pytest.approx(1.0 + 3 * 0.3 * 2.0)


def test_recover_full_state_no_complex(base):
    t = np.linspace(0.0, 1.0, 5)
    traj = Trajectory(t, np.column_stack([t, np.zeros_like(t)]))
    full = recover_full_state(base, traj, p0=0.5)
    assert np.all(full["e"] == base.e_T)
    assert np.all(full["p"] == 0.5)


def test_product_throughput_equals_inflow_at_equilibrium(base):
    t = np.linspace(0.0, 10.0, 101)
    traj = Trajectory(t, np.tile([20.0, 5 / 6], (len(t), 1)))
    full = recover_full_state(base, traj)
    assert np.allclose(np.diff(full["p"]) / np.diff(t), base.k0)
