"""Slow manifold as the graph ``c = C(s)`` of a solution of the invariance
equation ``dc/dt(s, C) = C'(s) ds/dt(s, C)``.

Rearranged for ``C`` the invariance equation reads

    C = [k1 e_T s (1 + C') - k0 C'] / [(k1 s + k_m1)(1 + C') + k2]

and one application of the right-hand side to a sampled curve is a
:func:`fraser_step`.  Plain repetition of that step (Picard iteration) is
not a contraction on a fine grid: the linearised step maps a perturbation
``d`` to roughly ``-(ds/dt)/den * d'``, which amplifies grid-scale noise by
a factor of order ``|ds/dt| / (den h)`` per step.  :func:`slow_manifold`
therefore takes Picard steps only to get started (one by default) and then
solves the discretised invariance equation by damped Newton iteration.  The
result is a fixed point of :func:`fraser_step` on the grid, which is what
the Picard iteration would converge to if it converged.

Every trajectory that is a graph over the grid also solves the invariance
equation.  Such graphs merge with the slow manifold exponentially fast in
``s`` away from the inflow end ``s = 0``, but near ``s = 0`` the discrete
solution is one member of this bundle and shifts slightly with the grid
spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import ConvergenceError, NumericalError, ParameterError
from .model import ParameterFamily, RateParameters, equilibrium, EquilibriumKind

_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def derivative_matrix(n: int, h: float) -> sparse.csr_matrix:
    """Fourth-order finite-difference ``d/ds`` on ``n`` uniform points.

    Central five-point stencil inside, one-sided five-point stencils on the
    two points next to each end.
    """
    if n < 5:
        raise ParameterError("need at least 5 grid points for fourth-order slopes")
    rows, cols, vals = [], [], []
    for i in range(2, n - 2):
        rows += [i] * 5
        cols += range(i - 2, i + 3)
        vals += list(_CENTRAL)
    for i, stencil in ((0, _EDGE0), (1, _EDGE1)):
        rows += [i] * 5
        cols += range(5)
        vals += list(stencil)
        rows += [n - 1 - i] * 5
        cols += range(n - 5, n)
        vals += list(-stencil[::-1])
    return sparse.csr_matrix((np.array(vals) / h, (rows, cols)), shape=(n, n))


def _check_grid(grid) -> tuple[np.ndarray, float]:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 5:
        raise ParameterError("grid must be 1-D with at least 5 points")
    steps = np.diff(grid)
    h = (grid[-1] - grid[0]) / (len(grid) - 1)
    if not np.all(steps > 0):
        raise ParameterError("grid must be strictly increasing")
    if np.max(np.abs(steps - h)) > 1e-9 * max(h, abs(grid[-1])):
        raise ParameterError("grid must be uniform")
    return grid, h


def slopes(grid, c_values) -> np.ndarray:
    """Fourth-order finite-difference slopes of ``c_values`` on a uniform grid."""
    grid, h = _check_grid(grid)
    return derivative_matrix(len(grid), h) @ np.asarray(c_values, dtype=float)


@dataclass
class ManifoldCurve:
    """Sampled graph ``c = C(s)``.

    Attributes
    ----------
    grid : ndarray
        Uniform, strictly increasing ``s`` values.
    c_values : ndarray
    dc_ds : ndarray
        Fourth-order finite-difference slopes.
    residual_sup : float
        Sup over the grid of the invariance defect (NaN if not evaluated).
    vertical : bool
        Marks the formal vertical curve ``C' = inf``; ``c_values`` are then
        meaningless and :func:`fraser_step` maps it to the ``s``-nullcline.
    """

    grid: np.ndarray
    c_values: np.ndarray
    dc_ds: np.ndarray | None = None
    residual_sup: float = math.nan
    vertical: bool = False

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.c_values = np.asarray(self.c_values, dtype=float)
        if self.c_values.shape != self.grid.shape:
            raise ParameterError("grid and c_values differ in length")
        if self.dc_ds is None and not self.vertical:
            self.dc_ds = slopes(self.grid, self.c_values)
        elif self.dc_ds is not None:
            self.dc_ds = np.asarray(self.dc_ds, dtype=float)

    @classmethod
    def zero(cls, grid) -> ManifoldCurve:
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.zeros_like(grid), np.zeros_like(grid))

    @classmethod
    def vertical_curve(cls, grid) -> ManifoldCurve:
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.full_like(grid, np.nan), np.full_like(grid, np.inf), vertical=True)

    @classmethod
    def from_function(cls, grid, func, p: RateParameters | None = None) -> ManifoldCurve:
        grid = np.asarray(grid, dtype=float)
        curve = cls(grid, np.asarray(func(grid), dtype=float) * np.ones_like(grid))
        if p is not None:
            curve.residual_sup = invariance_residual(p, curve)
        return curve

    def __call__(self, s):
        """Cubic Hermite interpolation between grid points."""
        if self.vertical:
            raise ParameterError("the vertical curve has no values")
        s = np.asarray(s, dtype=float)
        if np.any(s < self.grid[0] - 1e-12) or np.any(s > self.grid[-1] + 1e-12):
            raise ParameterError("evaluation point outside the grid")
        return CubicHermiteSpline(self.grid, self.c_values, self.dc_ds)(s)

    @property
    def s_max(self) -> float:
        return float(self.grid[-1])


def _fraser_values(p: RateParameters, s, slope):
    num = p.k1 * p.e_T * s * (1 + slope) - p.k0 * slope
    den = (p.k1 * s + p.k_m1) * (1 + slope) + p.k2
    return num, den


def fraser_step(p: RateParameters, C: ManifoldCurve) -> ManifoldCurve:
    """Apply the rearranged invariance equation once.

    Raises
    ------
    NumericalError
        If the denominator ``(k1 s + k_m1)(1 + C') + k2`` is within 1e-12 of
        zero at some grid point.
    """
    s = C.grid
    if C.vertical:
        # limit C' -> inf: numerator and denominator divided by C'
        den = p.k1 * s + p.k_m1
        if np.min(np.abs(den)) <= 1e-12:
            raise NumericalError("k1 s + k_m1 vanishes on the grid")
        values = (p.k1 * p.e_T * s - p.k0) / den
    else:
        num, den = _fraser_values(p, s, C.dc_ds)
        bad = np.abs(den) <= 1e-12
        if np.any(bad):
            raise NumericalError(f"Fraser denominator vanishes at s = {s[bad][0]:.6g}")
        values = num / den
    new = ManifoldCurve(s, values)
    new.residual_sup = invariance_residual(p, new)
    return new


def invariance_pointwise(p: RateParameters, C: ManifoldCurve) -> np.ndarray:
    s, c, dc = C.grid, C.c_values, C.dc_ds
    binding = p.k1 * (p.e_T - c) * s
    s_dot = p.k0 - binding + p.k_m1 * c
    c_dot = binding - (p.k_m1 + p.k2) * c
    return c_dot - dc * s_dot


def invariance_residual(p: RateParameters, C: ManifoldCurve) -> float:
    """``max |dc/dt(s, C) - C'(s) ds/dt(s, C)|`` over the grid."""
    return float(np.max(np.abs(invariance_pointwise(p, C))))


@dataclass
class IterationReport:
    """History of a :func:`slow_manifold` run.

    Attributes
    ----------
    iterates : list of ManifoldCurve
        Starting curve followed by every iterate.
    sup_deltas : list of float
        ``max |C_{i+1} - C_i|`` for consecutive iterates.
    methods : list of str
        ``"picard"`` or ``"newton"`` for each update.
    converged : bool
        Last update below ``tol`` and the final curve a fixed point of
        :func:`fraser_step` to within ``tol``.
    fixed_point_delta : float
        ``max |fraser_step(C) - C|`` for the returned curve.
    pointwise_converged : ndarray of bool
        Per-grid-point version of the fixed-point test.
    message : str
    """

    iterates: list = field(default_factory=list)
    sup_deltas: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    converged: bool = False
    fixed_point_delta: float = math.nan
    pointwise_converged: np.ndarray | None = None
    tol: float = math.nan
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "tol": self.tol,
            "n_iterations": len(self.sup_deltas),
            "sup_deltas": [float(d) for d in self.sup_deltas],
            "methods": list(self.methods),
            "residual_sups": [float(c.residual_sup) for c in self.iterates],
            "fixed_point_delta": float(self.fixed_point_delta),
            "fraction_points_converged": (float(np.mean(self.pointwise_converged))
                                          if self.pointwise_converged is not None else None),
            "message": self.message,
        }


def default_grid(p: RateParameters, n: int = 2001, s_max: float | None = None) -> np.ndarray:
    """Uniform grid on ``[0, max(3 s_hat, 10 K_M)]`` unless ``s_max`` is given."""
    if s_max is None:
        if p.k1 == 0:
            raise ParameterError("k1 = 0: no natural concentration scale for the grid")
        s_max = 10 * p.K_M
        eq = equilibrium(p)
        if eq is not None and eq.kind is EquilibriumKind.ATTRACTING_NODE_FIRST_QUADRANT:
            s_max = max(s_max, 3 * eq.s_hat)
    if not s_max > 0:
        raise ParameterError("s_max must be positive")
    return np.linspace(0.0, s_max, n)


def _discrete_residual(p: RateParameters, s, c, D):
    slope = D @ c
    binding = p.k1 * (p.e_T - c) * s
    s_dot = p.k0 - binding + p.k_m1 * c
    c_dot = binding - (p.k_m1 + p.k2) * c
    return c_dot - slope * s_dot, slope, s_dot


def _newton_update(p: RateParameters, s, c, D):
    """Armijo-damped Newton step for the discrete invariance equation."""
    residual, slope, s_dot = _discrete_residual(p, s, c, D)
    diag = -(p.k1 * s + p.k_m1 + p.k2) - slope * (p.k1 * s + p.k_m1)
    jac = sparse.diags(diag) - sparse.diags(s_dot) @ D
    with np.errstate(all="raise"):
        try:
            delta = sparse_linalg.spsolve(jac.tocsc(), -residual)
        except (FloatingPointError, RuntimeError) as exc:
            raise NumericalError(f"singular Newton system: {exc}") from None
    if not np.all(np.isfinite(delta)):
        raise NumericalError("singular Newton system")
    r0 = np.max(np.abs(residual))
    lam = 1.0
    while lam > 1e-3:
        trial = np.max(np.abs(_discrete_residual(p, s, c + lam * delta, D)[0]))
        if trial < (1 - 1e-4 * lam) * r0:
            break
        lam /= 2
    return lam * delta


def slow_manifold(p: RateParameters, grid=None, tol: float = 1e-10, max_iter: int = 50,
                  method: str = "newton", picard_steps: int = 1,
                  initial: ManifoldCurve | None = None) -> tuple[ManifoldCurve, IterationReport]:
    """Compute the slow manifold on ``grid`` starting from ``C0 = 0``.

    Parameters
    ----------
    p : RateParameters
    grid : array_like or int, optional
        Uniform ``s`` grid, or a number of points for :func:`default_grid`.
    tol : float
        Target for the sup-norm update and for the fixed-point defect.
    max_iter : int
        Maximum number of updates (Picard and Newton together).
    method : {"newton", "picard"}
        ``"picard"`` repeats :func:`fraser_step` only.  ``"newton"`` takes
        ``picard_steps`` Fraser steps and then damped Newton steps on the
        discrete invariance equation.
    initial : ManifoldCurve, optional
        Starting curve (default ``C0 = 0``).

    Returns
    -------
    curve, report
        On non-convergence the iterate with the smallest fixed-point defect
        is returned and ``report.converged`` is False.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if max_iter < 1:
        raise ParameterError("max_iter must be at least 1")
    if method not in ("newton", "picard"):
        raise ParameterError("method must be 'newton' or 'picard'")
    if grid is None:
        grid = default_grid(p)
    elif np.isscalar(grid):
        grid = default_grid(p, int(grid))
    grid, h = _check_grid(grid)
    D = derivative_matrix(len(grid), h)

    current = initial if initial is not None else ManifoldCurve.zero(grid)
    if current.residual_sup != current.residual_sup and not current.vertical:
        current.residual_sup = invariance_residual(p, current)
    report = IterationReport(iterates=[current], tol=tol)
    best, best_defect = None, math.inf
    message = f"no convergence after {max_iter} iterations"

    for it in range(max_iter):
        use_newton = method == "newton" and it >= picard_steps
        if use_newton:
            try:
                delta = _newton_update(p, grid, current.c_values, D)
            except NumericalError as exc:
                message = str(exc)
                break
            nxt = ManifoldCurve(grid, current.c_values + delta)
            nxt.residual_sup = invariance_residual(p, nxt)
        else:
            nxt = fraser_step(p, current)
        sup_delta = float(np.max(np.abs(nxt.c_values - current.c_values)))
        report.iterates.append(nxt)
        report.sup_deltas.append(sup_delta)
        report.methods.append("newton" if use_newton else "picard")
        current = nxt
        if not np.all(np.isfinite(current.c_values)):
            message = "iterate became non-finite"
            break
        defect = np.abs(fraser_step(p, current).c_values - current.c_values)
        if np.max(defect) < best_defect:
            best, best_defect = current, float(np.max(defect))
        if sup_delta < tol and np.max(defect) < tol:
            report.converged = True
            message = f"converged after {it + 1} iterations"
            break

    result = current if report.converged or best is None else best
    if result.vertical:
        raise ConvergenceError("no iterate was computed")
    pointwise = np.abs(fraser_step(p, result).c_values - result.c_values)
    report.fixed_point_delta = float(np.max(pointwise))
    report.pointwise_converged = pointwise < tol
    report.message = message
    return result, report


def axis_crossing(C: ManifoldCurve) -> float:
    """Where the curve meets ``c = 0``.

    If ``C(s_0) <= 0`` at the left end of the grid the first sign change is
    located on the Hermite interpolant; otherwise the curve is extrapolated
    linearly from the left end.
    """
    c = C.c_values
    if c[0] > 0:
        return float(C.grid[0] - c[0] / C.dc_ds[0]) if C.dc_ds[0] > 0 else -math.inf
    if c[0] == 0:
        return float(C.grid[0])
    idx = np.nonzero(c > 0)[0]
    if len(idx) == 0:
        raise NumericalError("curve stays below the s-axis on the whole grid")
    i = idx[0]
    spline = CubicHermiteSpline(C.grid, c, C.dc_ds)
    return float(brentq(spline, C.grid[i - 1], C.grid[i], xtol=1e-14))


# ---------------------------------------------------------------------------
# perturbation series

def perturbation_series(p_star: RateParameters, family: ParameterFamily, s, eps: float,
                        order: int = 2):
    """Truncated slow-manifold series along a TFPV ray, in original units.

    Parameters
    ----------
    p_star : RateParameters
        Base point of the ray; the family's two components are multiplied by
        ``eps``.
    family : ParameterFamily
        One of the three TFPV families.
    s : float or array_like
    eps : float
    order : {1, 2}
        Number of terms kept.  For ``TFPV_k0_eT`` and ``TFPV_k0_k1`` the
        terms are of order ``eps`` and ``eps**2``; for ``TFPV_k0_k2`` they
        are of order 1 and ``eps``.

    Returns
    -------
    c : float or ndarray
    """
    if order not in (1, 2):
        raise ParameterError("order must be 1 or 2")
    s = np.asarray(s, dtype=float)
    k0, e_T, k1, k_m1, k2 = p_star.as_tuple()
    kk = k_m1 + k2

    if family is ParameterFamily.TFPV_K0_ET:
        K_M = p_star.K_M
        out = s / (s + K_M) * eps
        if order == 2:
            out = out + K_M * (s * (k2 * e_T - k0) - k0 * K_M) / (k1 * (s + K_M) ** 4) * eps ** 2
        return e_T * out

    if family is ParameterFamily.TFPV_K0_K2:
        K_E = p_star.K_E
        out = s / (s + K_E)
        if order == 2:
            num = K_E * (k2 * s + k0) + k2 * s ** 2
            den = k1 * (s + K_E) * ((s + K_E) ** 2 + K_E * e_T)
            out = out - num / den * eps
        return e_T * out

    if family is ParameterFamily.TFPV_K0_K1:
        out = k1 * s / kk * eps
        if order == 2:
            out = out - k1 * (k1 * s * (s * kk - k2 * e_T) + k0 * kk) / kk ** 3 * eps ** 2
        return e_T * out

    raise ParameterError(f"{family.value} is not a TFPV family")
