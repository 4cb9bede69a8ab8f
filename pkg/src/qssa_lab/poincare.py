"""Behaviour at infinity via Poincare compactification.

Write ``x1 = s``, ``x2 = c`` and homogenise the vector field with a third
variable ``x3``:

    g1 = k0 x3^2 - k1 e_T x1 x3 + k1 x1 x2 + k_m1 x2 x3
    g2 = k1 e_T x1 x3 - k1 x1 x2 - (k_m1 + k2) x2 x3

The chart around the ``s`` direction uses ``(x2, x3) = (c/s, 1/s)`` and the
chart around the ``c`` direction uses ``(x1, x3) = (s/c, 1/c)``.  In both the
equator ``x3 = 0`` is invariant.  Three stationary points on the equator
matter for the first quadrant and its neighbourhood:

* ``P1`` at ``(0, 0)`` in the ``s`` chart (direction of growing ``s``),
* ``P3`` at ``(-1, 0)`` in the ``s`` chart (direction ``(1, -1)``),
* ``P2`` at ``(0, 0)`` in the ``c`` chart (direction of growing ``c``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConvergenceError, JacobianMismatchError, ParameterError
from .integrate import IntegratorConfig, Termination, Trajectory, integrate
from .model import EquilibriumKind, RateParameters, equilibrium, jacobian, vector_field


class Chart(enum.Enum):
    X1 = "X1Chart"
    X2 = "X2Chart"

    @property
    def coordinates(self) -> tuple[str, str]:
        return ("x2", "x3") if self is Chart.X1 else ("x1", "x3")


class InfinityLabel(enum.Enum):
    DEGENERATE_SADDLE = "DegenerateSaddle"
    DEGENERATE_ATTRACTING_NODE = "DegenerateAttractingNode"
    SADDLE_NODE = "SaddleNode"
    REPELLING_NODE = "RepellingNode"
    DEGENERATE_ATTRACTING_NODE_DEG4 = "DegenerateAttractingNodeDeg4"


def homogeneous_parts(p: RateParameters, x1, x2, x3):
    """``(g1, g2)``: the field homogenised to degree two."""
    k0, e_T, k1, k_m1, k2 = p.as_tuple()
    g1 = k0 * x3 ** 2 - k1 * e_T * x1 * x3 + k1 * x1 * x2 + k_m1 * x2 * x3
    g2 = k1 * e_T * x1 * x3 - k1 * x1 * x2 - (k_m1 + k2) * x2 * x3
    return g1, g2


def chart_rhs(chart: Chart, p: RateParameters, point) -> np.ndarray:
    """Vector field in a chart at ``point = (a, b)``.

    ``(a, b) = (x2, x3)`` for ``Chart.X1`` and ``(x1, x3)`` for ``Chart.X2``.
    """
    a, b = point
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k0, e_T, k1, k_m1, k2 = p.as_tuple()
    if chart is Chart.X1:
        x2, x3 = a, b
        dx2 = (-k1 * x2 + k1 * e_T * x3 - k1 * x2 ** 2 + (k1 * e_T - k_m1 - k2) * x2 * x3
               - k_m1 * x2 ** 2 * x3 - k0 * x2 * x3 ** 2)
        dx3 = -x3 * (k1 * x2 - k1 * e_T * x3 + k_m1 * x2 * x3 + k0 * x3 ** 2)
        return np.array([dx2, dx3])
    if chart is Chart.X2:
        x1, x3 = a, b
        dx1 = (k1 * x1 + k1 * x1 ** 2 + k_m1 * x3 + (k_m1 + k2 - k1 * e_T) * x1 * x3
               + k0 * x3 ** 2 - k1 * e_T * x1 ** 2 * x3)
        dx3 = -x3 * (k1 * e_T * x1 * x3 - k1 * x1 - (k_m1 + k2) * x3)
        return np.array([dx1, dx3])
    raise ParameterError(f"unknown chart {chart!r}")


def to_chart(chart: Chart, s, c):
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    if chart is Chart.X1:
        return c / s, 1.0 / s
    return s / c, 1.0 / c


def from_chart(chart: Chart, a, b):
    """Phase-plane ``(s, c)`` of a chart point with ``b != 0``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if chart is Chart.X1:
        return 1.0 / b, a / b
    return a / b, 1.0 / b


def chart_jacobian_fd(chart: Chart, p: RateParameters, point, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of :func:`chart_rhs`."""
    point = np.asarray(point, dtype=float)
    h = step * max(1.0, float(np.max(np.abs(point))))
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        J[:, j] = (chart_rhs(chart, p, point + e) - chart_rhs(chart, p, point - e)) / (2 * h)
    return J


def _closed_form_jacobians(p: RateParameters) -> dict:
    k0, e_T, k1, k_m1, k2 = p.as_tuple()
    return {
        "P1": (Chart.X1, (0.0, 0.0), np.array([[-k1, k1 * e_T], [0.0, 0.0]])),
        "P2": (Chart.X2, (0.0, 0.0), np.array([[k1, k_m1], [0.0, 0.0]])),
        "P3": (Chart.X1, (-1.0, 0.0), np.array([[k1, k2], [0.0, k1]])),
    }


@dataclass
class InfinityPoint:
    name: str
    chart: Chart
    coordinates: tuple[float, float]
    jacobian: np.ndarray
    jacobian_fd: np.ndarray
    eigenvalues: tuple[float, float]
    label: InfinityLabel
    nfim_coefficient: float
    nfim_degree: int | None

    def to_dict(self) -> dict:
        return {
            "chart": self.chart.value,
            "coordinates": list(self.coordinates),
            "jacobian": self.jacobian.tolist(),
            "jacobian_fd": self.jacobian_fd.tolist(),
            "eigenvalues": list(self.eigenvalues),
            "label": self.label.value,
            "nfim_coefficient": self.nfim_coefficient,
            "nfim_degree": self.nfim_degree,
        }


@dataclass
class InfinityClassification:
    points: dict
    notes: dict = field(default_factory=dict)

    def __getitem__(self, name) -> InfinityPoint:
        return self.points[name]

    def to_dict(self) -> dict:
        return {"points": {k: v.to_dict() for k, v in self.points.items()}, "notes": self.notes}


def nfim_coefficients(p: RateParameters) -> dict:
    """Leading normal-form coefficients on the centre directions.

    Returns ``{name: (coefficient, degree)}`` for ``P1`` and ``P2``.
    """
    k0, e_T, k1, k_m1, k2 = p.as_tuple()
    margin = k2 * e_T - k0
    if margin != 0:
        p1 = (margin, 3)
    else:
        p1 = (-(k_m1 + k2) * k2 * e_T / k1, 4)
    return {"P1": p1, "P2": (k2, 2)}


def classify_infinity(p: RateParameters, rtol: float = 1e-6) -> InfinityClassification:
    """Classify ``P1``, ``P2``, ``P3``.

    Each Jacobian is computed both in closed form and by central differences
    on :func:`chart_rhs`; disagreement beyond ``rtol`` (relative to the
    largest entry) raises :class:`JacobianMismatchError`.  Labels come from
    the eigenvalues of the finite-difference Jacobian, refined by the sign of
    the normal-form coefficient where an eigenvalue vanishes.
    """
    if not (p.k1 > 0 and p.k2 > 0):
        raise ParameterError("classification at infinity needs k1 > 0 and k2 > 0")
    nfim = nfim_coefficients(p)
    points = {}
    for name, (chart, coords, J_closed) in _closed_form_jacobians(p).items():
        J_fd = chart_jacobian_fd(chart, p, coords)
        scale = max(1.0, float(np.max(np.abs(J_closed))))
        if np.max(np.abs(J_fd - J_closed)) > rtol * scale:
            raise JacobianMismatchError(f"{name}: closed form {J_closed.tolist()} vs "
                                        f"finite differences {J_fd.tolist()}")
        eig = np.linalg.eigvals(J_fd)
        eig = np.sort(eig.real)
        zero_tol = 1e-6 * scale
        coeff, degree = nfim.get(name, (math.nan, None))
        if abs(eig[0]) > zero_tol and abs(eig[1]) > zero_tol:
            if eig[0] > 0:
                label = InfinityLabel.REPELLING_NODE
            else:
                raise ParameterError(f"{name}: unexpected hyperbolic eigenvalues {eig}")
        else:
            nonzero = eig[0] if abs(eig[0]) > abs(eig[1]) else eig[1]
            if degree == 2:
                label = InfinityLabel.SADDLE_NODE
            elif nonzero < 0 and degree == 3:
                label = (InfinityLabel.DEGENERATE_SADDLE if coeff > 0
                         else InfinityLabel.DEGENERATE_ATTRACTING_NODE)
            elif nonzero < 0 and degree == 4 and coeff < 0:
                label = InfinityLabel.DEGENERATE_ATTRACTING_NODE_DEG4
            else:
                raise ParameterError(f"{name}: cannot classify eigenvalues {eig} with "
                                     f"normal-form coefficient {coeff} (degree {degree})")
        points[name] = InfinityPoint(name, chart, tuple(coords), J_closed, J_fd,
                                     (float(eig[0]), float(eig[1])), label, coeff, degree)
    notes = {
        "P2_linear_eigenvalue": ("+k1: the chart field's x1-coefficient is +k1, so the "
                                 "nonzero eigenvalue is repelling"),
    }
    if p.k2 * p.e_T < p.k0:
        notes["alpha_limits_second_subregion"] = "undetermined"
    return InfinityClassification(points, notes)


# ---------------------------------------------------------------------------
# distinguished trajectory

@dataclass
class DistinguishedTrajectory:
    """Numerical trace of the connection between ``P0`` and ``P1``.

    Attributes
    ----------
    trajectory : Trajectory
        Phase-plane samples in increasing time.  Samples with negative time
        (present only when ``k2 e_T > k0``) lie on the centre-manifold
        expansion at infinity; the rest come from direct integration.
    chart_points : ndarray
        ``(t, x2, x3)`` rows, the same samples in the ``s`` chart.
    seed_chart : tuple of float
        Seed in ``(x2, x3)`` (node case) or the phase-plane seed (saddle case).
    endpoint : ndarray
    endpoint_distance : float
        Distance to ``P0`` (node case) or NaN.
    tail_max_deviation : float
        ``max |c - e_T|`` over the tail (``s`` at least half the largest
        retained ``s``).
    """

    trajectory: Trajectory
    chart_points: np.ndarray
    seed_chart: tuple
    endpoint: np.ndarray
    endpoint_distance: float
    tail_max_deviation: float
    cutoff: float
    case: str


def _centre_manifold_c(p: RateParameters, s):
    # x2 = e_T x3 - (K_M e_T) x3^2 + O(x3^3), mapped back with c = x2/x3
    return p.e_T * (1.0 - p.K_M / np.asarray(s, dtype=float))


def distinguished_trajectory(p: RateParameters, cfg: IntegratorConfig | None = None,
                             offset: float = 1e-6, n_approach: int = 400,
                             arrival_tol: float = 1e-6) -> DistinguishedTrajectory:
    """Trace the distinguished trajectory between ``P1`` and ``P0``.

    Node case (``k2 e_T > k0``): the seed is the point at distance
    ``offset`` from ``P1`` on the tangent ``x2 = e_T x3`` of its
    centre-unstable manifold.  Escape from the degenerate saddle is
    algebraically slow (``dx3/dt ~ x3^3``), so the seed is carried along the
    quadratic centre-manifold expansion ``x2 = e_T x3 - K_M e_T x3^2`` to
    ``s = cutoff = 10 max(s_hat, K_M)``, with time from the quadrature of
    ``ds/(ds/dt)``.  The planar system is then integrated until it is within
    ``arrival_tol * max(1, s_hat)`` of ``P0``.  The transverse direction of
    the centre manifold is attracting, so errors made in the transport decay
    along the integration.

    Saddle case (``k2 e_T < k0``): the seed is ``P0 + offset |P0| v`` with
    ``v`` the unstable eigenvector pointing to larger ``s``; integration
    runs until ``s`` exceeds ``cutoff = 100 K_M``.
    """
    if not 0 < offset <= 1e-3:
        raise ParameterError("offset must lie in (0, 1e-3]")
    if not (p.k1 > 0 and p.k2 > 0):
        raise ParameterError("distinguished trajectory needs k1 > 0 and k2 > 0")
    eq = equilibrium(p)
    if eq is None or eq.kind not in (EquilibriumKind.ATTRACTING_NODE_FIRST_QUADRANT,
                                     EquilibriumKind.SADDLE_SECOND_QUADRANT):
        raise ParameterError("distinguished trajectory needs k2 e_T != k0")
    cfg = cfg or IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12, max_steps=400_000)
    f = vector_field(p)
    P0 = np.array([eq.s_hat, eq.c_hat])

    if eq.kind is EquilibriumKind.ATTRACTING_NODE_FIRST_QUADRANT:
        case = "P1_to_P0"
        cutoff = 10 * max(eq.s_hat, p.K_M)
        x3_seed = offset / math.hypot(1.0, p.e_T)
        x2_seed = p.e_T * x3_seed
        if not x3_seed > 0:
            raise ParameterError("seed left the upper half of the chart")
        s_seed = 1.0 / x3_seed
        if s_seed <= cutoff:
            raise ParameterError("offset too large: seed lies inside the cutoff")
        # approach samples, log-spaced in s, transported along the expansion
        s_app = np.geomspace(s_seed, cutoff, n_approach)
        c_app = _centre_manifold_c(p, s_app)
        sdot = f(0.0, (s_app, c_app))[0]
        if np.any(sdot >= 0):
            raise ConvergenceError("ds/dt not negative along the centre-manifold expansion")
        # time to reach cutoff, increasing towards 0 at the cutoff
        tau = cumulative_trapezoid(1.0 / sdot, s_app, initial=0.0)
        t_app = tau - tau[-1]
        radius = arrival_tol * max(1.0, eq.s_hat)

        def arrived(t, y):
            return math.hypot(y[0] - P0[0], y[1] - P0[1]) - radius

        x0 = np.array([cutoff, c_app[-1]])
        t_end = 1e3 * (1.0 / abs(eq.eigenvalues[1]) + 1.0)
        traj = integrate(f, x0, (0.0, t_end), cfg, event=arrived, names=("s", "c"))
        if traj.termination is not Termination.EVENT_FIRED:
            raise ConvergenceError(f"did not reach P0 within t = {t_end:g}")
        times = np.concatenate([t_app[:-1], traj.times])
        states = np.vstack([np.column_stack([s_app[:-1], c_app[:-1]]), traj.states])
        endpoint = traj.final
        distance = float(np.hypot(*(endpoint - P0)))
        seed = (float(x2_seed), float(x3_seed))
    else:
        case = "P0_to_P1"
        cutoff = 100 * p.K_M
        J = jacobian(p, P0)
        vals, vecs = np.linalg.eig(J)
        v = np.real(vecs[:, int(np.argmax(vals.real))])
        if v[0] < 0:
            v = -v
        x0 = P0 + offset * float(np.hypot(*P0)) * v

        def escaped(t, y):
            return y[0] - cutoff

        # ds/dt tends to k0 - k2 e_T > 0 along the branch
        t_end = 1e3 * (cutoff - P0[0]) / (p.k0 - p.k2 * p.e_T)
        traj = integrate(f, x0, (0.0, t_end), cfg, event=escaped, names=("s", "c"))
        if traj.termination is not Termination.EVENT_FIRED:
            raise ConvergenceError(f"s did not exceed {cutoff:g} within t = {t_end:g}")
        times, states = traj.times, traj.states
        endpoint = traj.final
        distance = math.nan
        seed = tuple(float(v) for v in x0)

    out = Trajectory(times, states, ("s", "c"), step_rejections=traj.step_rejections,
                     termination=traj.termination, n_steps=traj.n_steps)
    s_all, c_all = out["s"], out["c"]
    tail = s_all >= 0.5 * np.max(s_all)
    tail_dev = float(np.max(np.abs(c_all[tail] - p.e_T)))
    with np.errstate(divide="ignore", invalid="ignore"):
        x2, x3 = to_chart(Chart.X1, s_all, c_all)
    chart_points = np.column_stack([times, x2, x3])
    return DistinguishedTrajectory(out, chart_points, seed, endpoint, distance, tail_dev,
                                   float(cutoff), case)
