"""Adaptive Dormand-Prince 5(4) integration and trajectory comparison.

The integrator is a plain explicit embedded pair with proportional-integral
step-size control, cubic Hermite dense output and event location by
bisection.  It is written out here (rather than delegated to
``scipy.integrate.solve_ivp``) because the acceptance tests depend on
controlling the error norm, the dense output and the step-failure rule
exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import IntegrationError, ParameterError

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
# PI controller exponents for a 5th-order error estimate
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5

EVENT_TIME_RESOLUTION = 1e-10


class Termination(enum.Enum):
    REACHED_T_END = "ReachedTEnd"
    EVENT_FIRED = "EventFired"
    STEP_FAILURE = "StepFailure"


@dataclass
class IntegratorConfig:
    """Tolerances and limits for :func:`integrate`.

    Attributes
    ----------
    rel_tol, abs_tol : float
        Per-step error target ``abs_tol + rel_tol*|x|`` (max norm).
    max_step : float
        Upper bound on the step size.
    max_steps : int
        Maximum number of attempted steps.
    dense_grid : sequence of float, optional
        If given, the trajectory is reported on these times (those inside the
        integration window) instead of on the accepted steps.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    max_steps: int = 200_000
    dense_grid: Sequence[float] | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ParameterError("rel_tol and abs_tol must be positive")
        if not self.max_steps > 0:
            raise ParameterError("max_steps must be positive")
        if not self.max_step > 0:
            raise ParameterError("max_step must be positive")


@dataclass
class Trajectory:
    """Time-stamped samples of a state vector.

    ``states`` has shape ``(n_times, n_components)``; ``names`` labels the
    columns.  ``derivatives`` (same shape, optional) enables Hermite
    resampling.
    """

    times: np.ndarray
    states: np.ndarray
    names: tuple[str, ...] = ("s", "c")
    step_rejections: int = 0
    termination: Termination = Termination.REACHED_T_END
    derivatives: np.ndarray | None = None
    n_steps: int = 0
    message: str = ""
    raw_states: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        if len(self.times) != len(self.states):
            raise ParameterError("times and states differ in length")
        if self.states.shape[1] != len(self.names):
            raise ParameterError(f"{self.states.shape[1]} columns but names {self.names}")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ParameterError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.states[:, self.names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].copy()

    def interpolant(self):
        """Piecewise cubic interpolant of all components in time."""
        if len(self.times) < 2:
            raise ParameterError("need at least two samples to interpolate")
        if self.derivatives is not None:
            return CubicHermiteSpline(self.times, self.states, self.derivatives, axis=0)
        return CubicSpline(self.times, self.states, axis=0)


def _error_norm(err, x_old, x_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(x_old), np.abs(x_new))
    return float(np.max(np.abs(err) / scale))


def _initial_step(f, t0, x0, f0, direction_span, rtol, atol):
    scale = atol + rtol * np.abs(x0)
    d0 = np.max(np.abs(x0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    x1 = x0 + h0 * f0
    f1 = np.asarray(f(t0 + h0, x1), dtype=float)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def _hermite(t0, h, x0, x1, f0, f1, t):
    theta = (t - t0) / h
    h00 = (1 + 2 * theta) * (1 - theta) ** 2
    h10 = theta * (1 - theta) ** 2
    h01 = theta ** 2 * (3 - 2 * theta)
    h11 = theta ** 2 * (theta - 1)
    return h00 * x0 + h10 * h * f0 + h01 * x1 + h11 * h * f1


def _dp_step(f, t, x, fx, h, k):
    k[0] = fx
    for i in range(1, 7):
        k[i] = f(t + _C[i] * h, x + h * np.dot(_A[i], k[:i]))
    return x + h * (_B5 @ k), h * (_E @ k)


def integrate(rhs: Callable, x0, t_span, cfg: IntegratorConfig | None = None,
              event: Callable | None = None, names: Sequence[str] | None = None,
              nonnegative: Sequence[int] = (), strict: bool = True) -> Trajectory:
    """Integrate ``dx/dt = rhs(t, x)`` over ``t_span``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, x)`` returning an array shaped like ``x``.
    x0 : float or array_like
        Initial state; scalars are treated as 1-D systems.
    t_span : (float, float)
        Start and end time, ``t_span[1] > t_span[0]``.
    cfg : IntegratorConfig, optional
    event : callable, optional
        Scalar function ``g(t, x)``.  Integration stops with
        ``Termination.EVENT_FIRED`` at the first sign change of ``g``,
        located by bisection on the dense output to 1e-10 in time.
    names : sequence of str, optional
        Column labels (default ``("s", "c")`` for 2-D, ``("s",)`` for 1-D).
    nonnegative : sequence of int
        Components whose small negative excursions (within ``abs_tol``) are
        reported as zero.  The raw samples are kept in ``raw_states``.
    strict : bool
        Raise :class:`IntegrationError` on step failure instead of returning
        a truncated trajectory flagged ``Termination.STEP_FAILURE``.

    Returns
    -------
    Trajectory
    """
    cfg = cfg or IntegratorConfig()
    t0, t_end = float(t_span[0]), float(t_span[1])
    if not t_end > t0:
        raise ParameterError("t_span must be increasing")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if not np.all(np.isfinite(x)):
        raise ParameterError("x0 must be finite")
    dim = x.size
    if names is None:
        names = ("s", "c") if dim == 2 else ("s",) if dim == 1 else tuple(f"x{i}" for i in range(dim))
    names = tuple(names)

    def f(t, y):
        return np.atleast_1d(np.asarray(rhs(t, y), dtype=float))

    rtol, atol = cfg.rel_tol, cfg.abs_tol
    span = t_end - t0
    h_min = 1e-14 * span
    grid = None
    if cfg.dense_grid is not None:
        grid = np.asarray(cfg.dense_grid, dtype=float)
        grid = np.unique(grid[(grid >= t0) & (grid <= t_end)])
    grid_pos = 0

    t = t0
    fx = f(t, x)
    out_t, out_x, out_f = [], [], []

    def emit(tt, xx, ff):
        out_t.append(tt)
        out_x.append(np.array(xx, dtype=float))
        out_f.append(np.array(ff, dtype=float))

    if grid is None:
        emit(t, x, fx)
    else:
        while grid_pos < len(grid) and grid[grid_pos] <= t:
            emit(grid[grid_pos], x, fx)
            grid_pos += 1

    g_old = event(t, x) if event is not None else None
    h = min(_initial_step(f, t, x, fx, span, rtol, atol), cfg.max_step)
    err_prev = 1.0
    rejections = 0
    steps = 0
    termination = Termination.REACHED_T_END
    message = ""
    k = np.empty((7, dim))

    while t < t_end:
        if steps >= cfg.max_steps:
            termination = Termination.STEP_FAILURE
            message = f"max_steps={cfg.max_steps} exceeded at t={t:.6g}"
            break
        if h < h_min:
            termination = Termination.STEP_FAILURE
            message = f"step size underflow (h={h:.3g}) at t={t:.6g}"
            break
        h = min(h, t_end - t)
        steps += 1
        x_new, err = _dp_step(f, t, x, fx, h, k)
        if not np.all(np.isfinite(x_new)):
            err_norm = math.inf
        else:
            err_norm = _error_norm(err, x, x_new, rtol, atol)

        if err_norm > 1.0:
            rejections += 1
            if math.isfinite(err_norm):
                factor = max(_MIN_FACTOR, _SAFETY * err_norm ** (-1 / 5))
            else:
                factor = _MIN_FACTOR
            h *= factor
            continue

        # accepted
        t_new = t + h if t_end - t - h > 1e-15 * span else t_end
        f_new = k[6].copy()
        fired = False
        if event is not None:
            g_new = event(t_new, x_new)
            if np.sign(g_new) != np.sign(g_old) and g_old != 0:
                # bisect with genuine partial steps from the accepted point,
                # which are as accurate as the step itself
                k_sub = np.empty_like(k)
                lo, hi = t, t_new
                g_lo, x_hi = g_old, x_new
                while hi - lo > EVENT_TIME_RESOLUTION:
                    mid = 0.5 * (lo + hi)
                    x_mid = _dp_step(f, t, x, fx, mid - t, k_sub)[0]
                    g_mid = event(mid, x_mid)
                    if np.sign(g_mid) == np.sign(g_lo):
                        lo, g_lo = mid, g_mid
                    else:
                        hi, x_hi = mid, x_mid
                t_ev, x_ev = hi, x_hi
                f_ev = f(t_ev, x_ev)
                fired = True
            g_old = g_new

        if grid is not None:
            stop = t_ev if fired else t_new
            while grid_pos < len(grid) and grid[grid_pos] <= stop:
                tg = grid[grid_pos]
                xg = _hermite(t, h, x, x_new, fx, f_new, tg)
                emit(tg, xg, f(tg, xg))
                grid_pos += 1
        if fired:
            if not out_t or t_ev > out_t[-1]:
                emit(t_ev, x_ev, f_ev)
            t, x, fx = t_ev, x_ev, f_ev
            termination = Termination.EVENT_FIRED
            break
        if grid is None:
            emit(t_new, x_new, f_new)

        if err_norm == 0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err_norm ** (-_ALPHA) * err_prev ** _BETA
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = max(err_norm, 1e-4)
        t, x, fx = t_new, x_new, f_new
        h = min(h * factor, cfg.max_step)

    if termination is Termination.STEP_FAILURE and strict:
        raise IntegrationError(message)

    times = np.array(out_t)
    raw = np.array(out_x).reshape(len(out_t), dim)
    derivs = np.array(out_f).reshape(len(out_t), dim)
    # drop duplicated stamps (possible when an event lands on a grid node)
    if len(times) > 1:
        keep = np.concatenate([[True], np.diff(times) > 0])
        times, raw, derivs = times[keep], raw[keep], derivs[keep]
    states = raw.copy()
    for i in nonnegative:
        col = states[:, i]
        col[(col < 0) & (col >= -atol)] = 0.0
    return Trajectory(times, states, names, step_rejections=rejections,
                      termination=termination, derivatives=derivs, n_steps=steps,
                      message=message, raw_states=raw)


def simulate(p, x0, t_end: float, cfg: IntegratorConfig | None = None,
             event: Callable | None = None, t0: float = 0.0) -> Trajectory:
    """Integrate the planar mass-action system from ``x0 = (s, c)``."""
    from .model import vector_field

    return integrate(vector_field(p), x0, (t0, t_end), cfg, event=event,
                     names=("s", "c"), nonnegative=(0, 1))


class CompareMode(enum.Enum):
    SUP_NORM_S = "SupNormS"
    L2_S = "L2S"


def compare_trajectories(full: Trajectory, reduced: Trajectory,
                         mode: CompareMode | str = CompareMode.SUP_NORM_S,
                         window: tuple[float, float] | None = None,
                         n_points: int = 4001) -> float:
    """Distance between the ``s`` components of two trajectories.

    Both are resampled by piecewise cubic interpolation onto a uniform grid of
    ``n_points`` covering the overlap of their time ranges (intersected with
    ``window`` if given).  ``SupNormS`` returns the maximum absolute
    difference, ``L2S`` the root of the time integral of its square.
    """
    mode = CompareMode(mode) if isinstance(mode, str) else mode
    lo = max(full.times[0], reduced.times[0])
    hi = min(full.times[-1], reduced.times[-1])
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    if not hi > lo:
        raise ParameterError("trajectories have no overlapping time window")
    ts = np.linspace(lo, hi, n_points)
    col_a = full.names.index("s")
    col_b = reduced.names.index("s")
    diff = full.interpolant()(ts)[:, col_a] - reduced.interpolant()(ts)[:, col_b]
    if mode is CompareMode.SUP_NORM_S:
        return float(np.max(np.abs(diff)))
    return float(math.sqrt(trapezoid(diff ** 2, ts)))
