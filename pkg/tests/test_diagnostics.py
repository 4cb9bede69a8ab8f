import math

import mpmath
import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from qssa_lab import (ParameterError, RateParameters, Verdict, delta, delta_max,
                      gronwall_bound, qss_defect, qssa_diagnostics, stoleriu_ratio,
                      switch_threshold)
from qssa_lab.diagnostics import annotations, delta_argmax, qss_variety, variety_distance


def test_reference_point(base):
    d = qssa_diagnostics(base)
    assert d.eps_c == 0.25
    assert d.tau0 == 4.0
    assert d.eps_star == 0.15625
    assert d.eps_o == 0.1875
    assert d.alpha == pytest.approx(5 / 6)
    assert d.delta0 == 0.15625
    assert d.delta_m == pytest.approx(27 * 3 * (1 / 6) ** 4 / (256 * 16))
    assert d.verdict is Verdict.USE_DELTA0
    assert d.governing == d.delta0


def test_small_enzyme_limit(base):
    d = qssa_diagnostics(base.replace(e_T=1e-9, k0=1e-12))
    assert d.eps_c < 1e-8 and d.eps_star < 1e-8 and d.eps_o < 1e-8 and d.delta_m < 1e-8


def test_low_inflow_uses_delta_m():
    p = RateParameters(0.15, 1.0, 1.0, 1.0, 3.0)  # alpha = 0.05
    d = qssa_diagnostics(p)
    assert d.verdict is Verdict.USE_DELTA_M
    assert d.governing == d.delta_m


def test_inflow_exceeds_capacity(unbounded):
    d = qssa_diagnostics(unbounded)
    assert d.verdict is Verdict.INFLOW_EXCEEDS_CAPACITY
    assert d.delta_m is None
    assert d.to_dict()["verdict"] == "InflowExceedsCapacity"


def test_verdict_boundary_switches_branch():
    x = switch_threshold()
    for shift, larger in ((-1e-3, "delta_m"), (1e-3, "delta0")):
        p = RateParameters((x + shift) * 3.0, 1.0, 1.0, 1.0, 3.0)
        d = qssa_diagnostics(p)
        assert (d.delta_m > d.delta0) == (larger == "delta_m")
        expected = Verdict.USE_DELTA_M if larger == "delta_m" else Verdict.USE_DELTA0
        assert d.verdict is expected


def test_diagnostics_preconditions():
    with pytest.raises(ParameterError):
        qssa_diagnostics(RateParameters(1.0, 1.0, 0.0, 1.0, 1.0))


def test_delta_values(base):
    assert delta(base, 20.0) < 1e-14
    assert delta(base, 0.0) == pytest.approx(0.15625)
    assert np.all(delta(base, np.linspace(0, 50, 11)) >= 0)


# golden-section maxima, frozen from scipy's bounded search at xatol 1e-12
GOLDEN = [
    ((0.1, 1, 1, 1, 3), 0.0172676025390625, 1.5172413579971586),
    ((0.2, 1, 1, 1, 3), 0.01500625, 1.714285703929729),
    ((1, 2, 1, 0.5, 4), 0.02442423502604167, 2.3571428609601828),
]


@pytest.mark.parametrize("values, peak, where", GOLDEN)
def test_delta_max_against_numerical_maximum(values, peak, where):
    p = RateParameters(*values)
    assert delta_max(p) == pytest.approx(peak, rel=1e-8)
    assert delta_argmax(p) == pytest.approx(where, rel=1e-6)
    res = minimize_scalar(lambda s: -delta(p, s), bounds=(0.5, 20 * p.K_M), method="bounded",
                          options={"xatol": 1e-12})
    assert -res.fun == pytest.approx(delta_max(p), rel=1e-8)


def test_delta_max_requires_interior(unbounded):
    with pytest.raises(ParameterError):
        delta_max(unbounded)
    with pytest.raises(ParameterError):
        delta_argmax(unbounded)


def test_reference_point_global_max_is_at_zero(base):
    s = np.linspace(0, 200, 20001)
    assert np.max(delta(base, s)) == pytest.approx(delta(base, 0.0))


def test_switch_threshold():
    x = switch_threshold()
    oracle = mpmath.findroot(lambda y: mpmath.mpf(27) / 256 * (1 - y) ** 4 - y, 0.07)
    assert x == pytest.approx(float(oracle), abs=1e-13)
    assert round(x, 4) == 0.0767
    assert abs(27 / 256 * (1 - x) ** 4 - x) < 1e-12
    assert switch_threshold() is x or switch_threshold() == x


def test_gronwall_bound(base):
    assert gronwall_bound(base, 0.0, 3.0) == pytest.approx(0.15625)
    assert gronwall_bound(base, 1.0, 0.0) == pytest.approx(math.sqrt(1 + 0.15625 ** 2))
    assert gronwall_bound(base, 1.0, 1e3) == pytest.approx(0.15625)
    t = np.linspace(0, 5, 6)
    assert np.all(np.diff(gronwall_bound(base, 2.0, t)) < 0)


def test_stoleriu_ratio(base):
    assert stoleriu_ratio(base, 0.0) == pytest.approx(1 / (24 + 5 / 6))
    assert stoleriu_ratio(base.replace(e_T=0.0), 0.0) == 0.0
    near_one = base.replace(k0=3.0 * (1 - 1e-9))
    assert stoleriu_ratio(near_one, 0.0) < 1e-8
    with pytest.raises(ParameterError):
        stoleriu_ratio(base.replace(k0=3.0), 0.0)


def test_qss_defect(base):
    assert qss_defect(base, 20.0) == pytest.approx(0.0, abs=1e-15)
    assert abs(qss_defect(base, 5.0)) > 0


S = np.linspace(0.0, 50.0, 101)


@pytest.mark.parametrize("values", [
    (2.5, 0.0, 1.0, 1.0, 3.0),   # e_T = 0
    (2.5, 1.0, 0.0, 1.0, 3.0),   # k1 = 0
    (0.0, 1.0, 1.0, 1.0, 0.0),   # k0 = k2 = 0
    (2.5, 1.0, 1.0, 0.0, 0.0),   # k_m1 = k2 = 0
])
def test_qss_defect_vanishes_on_qss_families(values):
    p = RateParameters(*values)
    assert np.max(np.abs(qss_defect(p, S))) < 1e-14


def test_qss_defect_generic_counterexample(base):
    assert np.max(np.abs(qss_defect(base, S))) > 1e-3


def test_variety(base):
    assert qss_variety(base, 4.0) == 0.5
    assert variety_distance(base, 4.0, 0.75) == pytest.approx(0.25)


def test_annotations_are_strings(base):
    notes = annotations(qssa_diagnostics(base))
    assert "eps_o" in notes and all(isinstance(v, str) for v in notes.values())
