"""Closed-form reduced models and the planar Fenichel projection.

Each reduced model is a scalar equation ``ds/dt = rhs_s(s)`` together with
the curve ``c = manifold_c(s)`` it lives on and a rule that maps a full
initial value ``(s0, c0)`` to a starting point on that curve.

The projection constructor works from an explicit factorisation of the
vector field at a singular parameter point, ``h = P f`` with perturbation
``G``, and returns ``Pi = I - P (Df P)^{-1} Df``.  The small components of
the family enter ``G`` at their actual values, so the projected equation is
already in the original time scale.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from .errors import NormalHyperbolicityError, ParameterError
from .model import ParameterFamily, RateParameters


class ReductionKind(enum.Enum):
    SQSSA = "SQSSA"
    QEA = "QEA"
    LINEAR_LAW = "LinearLaw"
    FENICHEL_K0K1 = "Fenichel_k0k1"
    FENICHEL_K0K2 = "Fenichel_k0k2"
    CLASSICAL_QSS_K0K2 = "ClassicalQSS_k0k2"

    @property
    def cli_name(self) -> str:
        return _CLI_NAMES[self]

    @classmethod
    def from_cli(cls, name: str) -> ReductionKind:
        for kind, label in _CLI_NAMES.items():
            if label == name:
                return kind
        raise ParameterError(f"unknown reduction {name!r}; choose from {', '.join(_CLI_NAMES.values())}")


_CLI_NAMES = {
    ReductionKind.SQSSA: "sqssa",
    ReductionKind.QEA: "qea",
    ReductionKind.LINEAR_LAW: "linear",
    ReductionKind.FENICHEL_K0K1: "fenichel-k0k1",
    ReductionKind.FENICHEL_K0K2: "fenichel-k0k2",
    ReductionKind.CLASSICAL_QSS_K0K2: "classical-k0k2",
}


@dataclass(frozen=True)
class ReducedModel:
    """A one-dimensional reduction of the planar system.

    Attributes
    ----------
    kind : ReductionKind
    rhs_s : callable
        ``s -> ds/dt``; accepts arrays.
    manifold_c : callable
        ``s -> c`` on the curve carrying the reduced flow.
    map_initial : callable
        ``(s0, c0) -> s0_tilde``.
    formula : str
        Human-readable closed form of ``rhs_s``.
    """

    kind: ReductionKind
    params: RateParameters
    rhs_s: Callable
    manifold_c: Callable
    map_initial: Callable
    formula: str = ""

    def vector_field(self):
        """``f(t, s)`` for :func:`qssa_lab.integrate.integrate`."""
        return lambda t, y: self.rhs_s(y)


def _identity_map(s0, c0):
    return float(s0)


def reduced_model(p: RateParameters, kind: ReductionKind | str) -> ReducedModel:
    """Build the closed-form reduction ``kind`` for parameters ``p``.

    Raises
    ------
    ParameterError
        If a constant the reduction divides by vanishes (``k1 == 0`` where
        ``K_M`` or ``K_E`` is needed, or ``k_m1 + k2 == 0``).
    """
    if isinstance(kind, str):
        try:
            kind = ReductionKind(kind)
        except ValueError:
            kind = ReductionKind.from_cli(kind)
    k0, e_T, k1, k_m1, k2 = p.as_tuple()
    kk = k_m1 + k2
    if kk == 0:
        raise ParameterError("k_m1 + k2 = 0: Michaelis constant vanishes")
    needs_k1 = (ReductionKind.SQSSA, ReductionKind.QEA, ReductionKind.FENICHEL_K0K2,
                ReductionKind.CLASSICAL_QSS_K0K2)
    if kind in needs_k1 and k1 == 0:
        raise ParameterError(f"{kind.value} requires k1 > 0")

    def qea(s):
        return k1 * e_T * s / (k1 * s + k_m1)

    def fenichel_k0k2(s):
        bound = k1 * s + k_m1
        return bound * (k0 * bound - k2 * k1 * e_T * s) / (k1 * k_m1 * e_T + bound ** 2)

    if kind is ReductionKind.SQSSA:
        K_M = p.K_M
        return ReducedModel(
            kind, p,
            rhs_s=lambda s: k0 - k2 * e_T * s / (K_M + s),
            manifold_c=lambda s: e_T * s / (K_M + s),
            map_initial=_identity_map,
            formula=f"ds/dt = {k0:g} - {k2 * e_T:g}*s/({K_M:g} + s)")

    if kind is ReductionKind.QEA:
        if k_m1 == 0:
            raise ParameterError("QEA requires k_m1 > 0")
        return ReducedModel(
            kind, p, rhs_s=fenichel_k0k2, manifold_c=qea, map_initial=_make_sum_map(qea),
            formula="ds/dt as for fenichel-k0k2, c = e_T*s/(K_E + s)")

    if kind in (ReductionKind.LINEAR_LAW, ReductionKind.FENICHEL_K0K1):
        rate = k1 * k2 * e_T / kk
        if kind is ReductionKind.LINEAR_LAW:
            mapper = _identity_map
        else:
            def mapper(s0, c0):
                return float(s0 + k_m1 * c0 / kk)
        return ReducedModel(
            kind, p,
            rhs_s=lambda s: k0 - rate * np.asarray(s, dtype=float),
            manifold_c=lambda s: (k1 * e_T / kk) * np.asarray(s, dtype=float),
            map_initial=mapper,
            formula=f"ds/dt = {k0:g} - {rate:g}*s")

    if kind is ReductionKind.FENICHEL_K0K2:
        if k_m1 == 0:
            raise ParameterError("Fenichel_k0k2 requires k_m1 > 0")
        return ReducedModel(
            kind, p, rhs_s=fenichel_k0k2, manifold_c=qea, map_initial=_make_sum_map(qea),
            formula=("ds/dt = (k1 s + k_m1)(k0 (k1 s + k_m1) - k2 k1 e_T s)"
                     " / (k1 k_m1 e_T + (k1 s + k_m1)^2)"))

    if kind is ReductionKind.CLASSICAL_QSS_K0K2:
        if k_m1 == 0:
            raise ParameterError("ClassicalQSS_k0k2 requires k_m1 > 0")
        return ReducedModel(
            kind, p,
            rhs_s=lambda s: k0 - k2 * qea(s),
            manifold_c=qea,
            map_initial=_identity_map,
            formula="ds/dt = k0 - k2 k1 e_T s/(k1 s + k_m1)")

    raise ParameterError(f"unsupported reduction {kind}")


def _make_sum_map(manifold_c, maxiter: int = 200):
    """Initial-value map conserving ``s + c`` (first integral of the fast flow)."""

    def mapper(s0, c0):
        total = float(s0 + c0)
        if total < 0:
            raise ParameterError("s0 + c0 must be nonnegative")
        if total == 0:
            return 0.0

        def g(s):
            return s + manifold_c(s) - total

        # g(0) = -total < 0 and g(total) = manifold_c(total) >= 0
        if g(total) == 0:
            return total
        return bisect(g, 0.0, total, xtol=1e-15 * max(1.0, total), rtol=4 * np.finfo(float).eps,
                      maxiter=maxiter)

    return mapper


# ---------------------------------------------------------------------------
# projection

@dataclass(frozen=True)
class ProjectionData:
    """Factorisation ``h = P f`` of the unperturbed field plus the projector.

    All callables take ``(s, c)``.  ``Pi`` raises
    :class:`NormalHyperbolicityError` where ``Df P`` vanishes.
    """

    family: ParameterFamily
    params: RateParameters
    P: Callable
    f: Callable
    Df: Callable
    G: Callable
    manifold_c: Callable

    def DfP(self, s, c) -> float:
        return float(self.Df(s, c) @ self.P(s, c))

    def Pi(self, s, c) -> np.ndarray:
        P = self.P(s, c)
        Df = self.Df(s, c)
        dfp = float(Df @ P)
        scale = float(np.max(np.abs(P)) * np.max(np.abs(Df)))
        if scale == 0 or abs(dfp) <= 1e-12 * scale:
            raise NormalHyperbolicityError(f"Df P = {dfp} is singular at (s, c) = ({s}, {c})")
        return np.eye(2) - np.outer(P, Df) / dfp

    def tangent(self, s, c) -> np.ndarray:
        """A vector spanning the kernel of ``Df`` at ``(s, c)``."""
        a, b = self.Df(s, c)
        return np.array([-b, a])

    def reduced_rhs(self, s) -> float:
        """First component of ``Pi G`` on the critical manifold."""
        c = self.manifold_c(s)
        return float((self.Pi(s, c) @ self.G(s, c))[0])


def fenichel_projection(p: RateParameters, family: ParameterFamily) -> ProjectionData:
    """Projection data for one of the three TFPV families.

    ``p`` supplies all parameter values; the two components that vanish on
    the family appear only in the perturbation ``G``.
    """
    k0, e_T, k1, k_m1, k2 = p.as_tuple()

    if family is ParameterFamily.TFPV_K0_ET:
        return ProjectionData(
            family, p,
            P=lambda s, c: np.array([k1 * s + k_m1, -(k1 * s + k_m1 + k2)]),
            f=lambda s, c: c,
            Df=lambda s, c: np.array([0.0, 1.0]),
            G=lambda s, c: np.array([k0 - k1 * e_T * s, k1 * e_T * s]),
            manifold_c=lambda s: 0.0)

    if family is ParameterFamily.TFPV_K0_K1:
        return ProjectionData(
            family, p,
            P=lambda s, c: np.array([k_m1, -(k_m1 + k2)]),
            f=lambda s, c: c,
            Df=lambda s, c: np.array([0.0, 1.0]),
            G=lambda s, c: np.array([k0 - k1 * (e_T - c) * s, k1 * (e_T - c) * s]),
            manifold_c=lambda s: 0.0)

    if family is ParameterFamily.TFPV_K0_K2:
        if k1 == 0 or k_m1 == 0:
            raise ParameterError("TFPV_k0_k2 projection needs k1 > 0 and k_m1 > 0")
        return ProjectionData(
            family, p,
            P=lambda s, c: np.array([-1.0, 1.0]),
            f=lambda s, c: k1 * (e_T - c) * s - k_m1 * c,
            Df=lambda s, c: np.array([k1 * (e_T - c), -(k1 * s + k_m1)]),
            G=lambda s, c: np.array([k0, -k2 * c]),
            manifold_c=lambda s: k1 * e_T * s / (k1 * s + k_m1))

    raise ParameterError(f"{family.value} is not a TFPV family")


FAMILY_REDUCTION = {
    ParameterFamily.TFPV_K0_ET: ReductionKind.SQSSA,
    ParameterFamily.TFPV_K0_K1: ReductionKind.FENICHEL_K0K1,
    ParameterFamily.TFPV_K0_K2: ReductionKind.FENICHEL_K0K2,
}
