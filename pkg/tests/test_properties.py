import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from qssa_lab import (Chart, EquilibriumKind, ParameterFamily, RateParameters, ReductionKind,
                      chart_rhs, classify_parameter_point, delta, divergence, equilibrium,
                      fenichel_projection, ray_scale, reduced_model, rhs)
from qssa_lab.phase_plane import wedge_inflow_check
from qssa_lab.reductions import FAMILY_REDUCTION

rate = st.floats(0.05, 10.0)
state = st.floats(0.0, 100.0)


@st.composite
def params(draw, k0=st.floats(0.0, 10.0)):
    return RateParameters(draw(k0), draw(rate), draw(rate), draw(rate), draw(rate))


@st.composite
def interior_params(draw):
    # inflow strictly below capacity, so a finite attracting node exists
    p = draw(params(k0=st.just(0.0)))
    frac = draw(st.floats(0.01, 0.95))
    return p.replace(k0=frac * p.k2 * p.e_T)


@given(params(), state, st.floats(0.0, 10.0))
def test_total_substrate_balance(p, s, c):
    ds, dc = rhs(p, (s, c))
    assert ds + dc == pytest.approx(p.k0 - p.k2 * c, abs=1e-9 * (1 + abs(ds) + abs(dc)))


@given(params(), state)
def test_boundary_inflow(p, x):
    # s = 0 edge: s' >= 0; c = 0 edge: c' >= 0; c = e_T edge: c' <= 0
    c = min(x, p.e_T)
    assert rhs(p, (0.0, c))[0] >= -1e-12
    assert rhs(p, (x, 0.0))[1] >= 0.0
    assert rhs(p, (x, p.e_T))[1] <= 1e-12


@given(interior_params())
def test_equilibrium_zeroes_field(p):
    eq = equilibrium(p)
    assert eq.kind is EquilibriumKind.ATTRACTING_NODE_FIRST_QUADRANT
    scale = p.k0 + p.k1 * p.e_T * eq.s_hat + (p.k_m1 + p.k2) * p.e_T
    assert np.max(np.abs(rhs(p, (eq.s_hat, eq.c_hat)))) < 1e-10 * scale
    assert all(ev < 0 for ev in eq.eigenvalues)


@given(params(), st.sampled_from([ParameterFamily.TFPV_K0_ET, ParameterFamily.TFPV_K0_K1,
                                  ParameterFamily.TFPV_K0_K2]))
def test_ray_limit_lies_in_family(p, family):
    assert family in classify_parameter_point(ray_scale(p, family, 0.0))


@given(params(), state, st.floats(0.0, 10.0))
def test_divergence_formula(p, s, c):
    expected = -p.k1 * (p.e_T - c) - p.k1 * s - p.k_m1 - p.k2
    assert divergence(p, (s, c)) == pytest.approx(expected)
    if c <= p.e_T:
        assert divergence(p, (s, c)) < 0


@given(params(), state, st.floats(0.0, 1.0))
def test_sum_map_conserves_total(p, s0, frac):
    model = reduced_model(p, ReductionKind.FENICHEL_K0K2)
    c0 = frac * p.e_T
    s_t = model.map_initial(s0, c0)
    assert s_t >= 0
    assert s_t + model.manifold_c(s_t) == pytest.approx(s0 + c0, rel=1e-9, abs=1e-9)


@settings(max_examples=50)
@given(params(), st.sampled_from(list(FAMILY_REDUCTION)), st.floats(0.0, 50.0))
def test_projection_is_idempotent(p, family, s):
    proj = fenichel_projection(p, family)
    Pi = proj.Pi(s, proj.manifold_c(s))
    assert np.allclose(Pi @ Pi, Pi, atol=1e-9 * max(1.0, np.max(np.abs(Pi))))


@given(params(), state)
def test_qea_curve_above_sqssa(p, s):
    sq = reduced_model(p, ReductionKind.SQSSA).manifold_c(s)
    qea = reduced_model(p, ReductionKind.QEA).manifold_c(s)
    assert qea >= sq - 1e-15


@given(params(), st.sampled_from(list(Chart)), st.floats(-10.0, 10.0))
def test_equator_is_invariant(p, chart, a):
    assert chart_rhs(chart, p, (a, 0.0))[1] == 0.0


@given(interior_params(), state)
def test_delta_nonnegative(p, s):
    assert delta(p, s) >= 0


@settings(max_examples=30, deadline=None)
@given(params(k0=st.floats(0.05, 10.0)))
def test_wedge_inflow_holds(p):
    # with k0 = 0 the wedge shrinks to the origin
    assume(p.k2 * p.e_T != p.k0)
    assert wedge_inflow_check(p, 60).passed
