"""Nullclines, the funnel between them, and the divergence of the field."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError, ParameterError
from .model import EquilibriumKind, RateParameters, equilibrium, rhs

SLACK = 1e-12


@dataclass(frozen=True)
class Nullclines:
    """``N_c``: where ``dc/dt = 0``; ``N_s``: where ``ds/dt = 0``.

    ``s_tilde`` is the ``s``-intercept of ``N_s``.
    """

    N_c: Callable
    N_s: Callable
    s_tilde: float

    def lower(self, s):
        """Lower edge of the wedge, ``max(0, N_s(s))``."""
        return np.maximum(0.0, self.N_s(s))

    def table(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.column_stack([s, self.N_c(s), self.N_s(s)])


def nullclines(p: RateParameters) -> Nullclines:
    if not (p.k1 > 0 and p.e_T > 0):
        raise ParameterError("nullclines need k1 > 0 and e_T > 0")
    k0, e_T, k1, k_m1, k2 = p.as_tuple()

    def N_c(s):
        s = np.asarray(s, dtype=float)
        return k1 * e_T * s / (k1 * s + k_m1 + k2)

    def N_s(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (k1 * e_T * s - k0) / (k1 * s + k_m1)

    return Nullclines(N_c, N_s, k0 / (k1 * e_T))


def divergence(p: RateParameters, x):
    """``-(k1 (e_T - c) + k1 s + k_m1 + k2)``, the trace of the Jacobian."""
    s, c = x
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    return -(p.k1 * (p.e_T - c) + p.k1 * s + p.k_m1 + p.k2)


def wedge_range(p: RateParameters, s_max: float | None = None) -> tuple[float, float]:
    """``s``-extent of the wedge: ``[0, s_hat]``, or ``[0, s_max]`` if unbounded."""
    eq = equilibrium(p)
    if eq is not None and eq.kind is EquilibriumKind.ATTRACTING_NODE_FIRST_QUADRANT:
        hi = eq.s_hat if s_max is None else min(s_max, eq.s_hat)
        return 0.0, hi
    if s_max is None:
        s_max = 100 * p.K_M
    return 0.0, float(s_max)


def in_wedge(p: RateParameters, s, c, slack: float = SLACK):
    """Closed membership test for the wedge, with absolute ``slack``."""
    nc = nullclines(p)
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    lo, hi = wedge_range(p, s_max=math.inf)
    return ((s >= -slack) & (s <= hi + slack) & (c >= nc.lower(s) - slack)
            & (c <= nc.N_c(s) + slack))


@dataclass
class WedgeReport:
    """Outcome of :func:`wedge_inflow_check`.

    ``min_*`` entries are the smallest value of the quantity that must be
    nonnegative on each arc.
    """

    s_range: tuple[float, float]
    n_samples: int
    min_sdot_upper: float
    min_cdot_lower: float
    min_cdot_axis: float
    min_sdot_axis: float
    min_total_rate: float
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "s_range": list(self.s_range),
            "n_samples": self.n_samples,
            "min_sdot_upper": self.min_sdot_upper,
            "min_cdot_lower": self.min_cdot_lower,
            "min_cdot_axis": self.min_cdot_axis,
            "min_sdot_axis": self.min_sdot_axis,
            "min_total_rate": self.min_total_rate,
            "passed": self.passed,
            "violations": self.violations,
        }


def wedge_inflow_check(p: RateParameters, n_samples: int = 100,
                       s_range: tuple[float, float] | None = None,
                       strict: bool = True) -> WedgeReport:
    """Check the sign conditions that make the wedge a funnel.

    On the upper arc ``c = N_c(s)`` (where ``dc/dt = 0``) the field must
    have ``ds/dt >= 0``; on the lower arc ``c = N_s(s) >= 0`` (where
    ``ds/dt = 0``) it must have ``dc/dt >= 0``; on the axis segment
    ``c = 0, s < s_tilde`` it must have ``dc/dt >= 0`` and ``ds/dt > 0``.
    ``ds/dt + dc/dt >= 0`` is checked on both arcs as well.

    Parameters
    ----------
    n_samples : int
        Points per arc, at least 10.
    s_range : (float, float), optional
        Defaults to the wedge's own extent, capped at ``100 K_M`` when it is
        unbounded.
    strict : bool
        Raise :class:`NumericalError` if a sign condition fails by more than
        1e-12 (relative to ``k0 + v_max``).
    """
    if n_samples < 10:
        raise ParameterError("n_samples must be at least 10")
    nc = nullclines(p)
    lo, hi = s_range if s_range is not None else wedge_range(p)
    if not hi > lo >= 0:
        raise ParameterError("s_range must satisfy 0 <= lo < hi")
    tol = SLACK * max(1.0, p.k0 + p.v_max)
    s = np.linspace(lo, hi, n_samples)
    violations = []

    upper = rhs(p, (s, nc.N_c(s)))
    min_sdot_upper = float(np.min(upper[0]))
    if min_sdot_upper < -tol:
        violations.append(f"ds/dt < 0 on the upper arc at s = {s[np.argmin(upper[0])]:.6g}")

    # lower arc proper: where N_s >= 0
    s_low = np.linspace(max(lo, nc.s_tilde), hi, n_samples) if hi > nc.s_tilde else np.array([])
    if s_low.size:
        lower = rhs(p, (s_low, nc.N_s(s_low)))
        min_cdot_lower = float(np.min(lower[1]))
        if min_cdot_lower < -tol:
            violations.append(f"dc/dt < 0 on the lower arc at s = {s_low[np.argmin(lower[1])]:.6g}")
        total_lower = lower[0] + lower[1]
    else:
        min_cdot_lower = math.inf
        total_lower = np.array([math.inf])

    # axis segment c = 0 with s < s_tilde
    s_ax = np.linspace(lo, min(hi, nc.s_tilde), n_samples, endpoint=False) if nc.s_tilde > lo else np.array([])
    if s_ax.size:
        axis = rhs(p, (s_ax, np.zeros_like(s_ax)))
        min_cdot_axis = float(np.min(axis[1]))
        min_sdot_axis = float(np.min(axis[0]))
        if min_cdot_axis < -tol:
            violations.append("dc/dt < 0 on the s-axis segment")
        if not min_sdot_axis > 0:
            violations.append("ds/dt <= 0 on the s-axis segment")
    else:
        min_cdot_axis = min_sdot_axis = math.inf

    min_total = float(min(np.min(upper[0] + upper[1]), np.min(total_lower)))
    if min_total < -tol:
        violations.append("ds/dt + dc/dt < 0 on the wedge boundary")

    report = WedgeReport((float(lo), float(hi)), n_samples, min_sdot_upper, min_cdot_lower,
                         min_cdot_axis, min_sdot_axis, min_total, violations)
    if strict and violations:
        raise NumericalError("; ".join(violations))
    return report
