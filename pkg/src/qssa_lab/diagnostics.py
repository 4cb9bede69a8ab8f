"""Scalar validity measures for the open sQSSA.

All functions are closed-form evaluations except :func:`switch_threshold`,
which solves ``(27/256)(1 - x)^4 = x`` once by bisection and caches it.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import ParameterError
from .model import RateParameters


class Verdict(enum.Enum):
    USE_DELTA_M = "UseDeltaM"
    USE_DELTA0 = "UseDelta0"
    INFLOW_EXCEEDS_CAPACITY = "InflowExceedsCapacity"


@dataclass(frozen=True)
class QssaDiagnostics:
    """Smallness parameters for one parameter point.

    Attributes
    ----------
    eps_c : float
        ``k1 e_T/(k_m1 + k2)``.
    tau0 : float
        Fast rate ``k_m1 + k2``.
    eps_star : float
        Distance scale ``k0 k1 e_T/(k_m1 + k2)^2`` (has units of concentration).
    eps_o : float
        ``k2 e_T/(K_M (k_m1 + k2))``.
    alpha : float
        ``k0/(k2 e_T)``.
    delta0 : float
        ``k0/(k1 K_M^2)``, the sQSSA error coefficient at ``s = 0``.
    delta_m : float or None
        Interior local maximum of the error coefficient; None unless
        ``k2 e_T > k0``.
    verdict : Verdict
        Which quantity governs the sQSSA error.
    """

    eps_c: float
    tau0: float
    eps_star: float
    eps_o: float
    alpha: float
    delta0: float
    delta_m: float | None
    verdict: Verdict

    @property
    def governing(self) -> float:
        """The error coefficient selected by the verdict."""
        if self.verdict is Verdict.USE_DELTA_M:
            return self.delta_m
        return self.delta0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict.value
        return out


def _require(p: RateParameters):
    if not (p.k1 > 0 and p.k2 > 0 and p.e_T > 0):
        raise ParameterError("diagnostics need k1 > 0, k2 > 0 and e_T > 0")


def qssa_diagnostics(p: RateParameters) -> QssaDiagnostics:
    """Evaluate every smallness parameter and pick the governing one."""
    _require(p)
    k0, e_T, k1, k_m1, k2 = p.as_tuple()
    tau0 = k_m1 + k2
    K_M = p.K_M
    alpha = k0 / (k2 * e_T)
    delta_m = delta_max(p) if k2 * e_T > k0 else None
    if alpha >= 1:
        verdict = Verdict.INFLOW_EXCEEDS_CAPACITY
    elif alpha < switch_threshold():
        verdict = Verdict.USE_DELTA_M
    else:
        verdict = Verdict.USE_DELTA0
    return QssaDiagnostics(
        eps_c=k1 * e_T / tau0,
        tau0=tau0,
        eps_star=k0 * k1 * e_T / tau0 ** 2,
        eps_o=k2 * e_T / (K_M * tau0),
        alpha=alpha,
        delta0=k0 / (k1 * K_M ** 2),
        delta_m=delta_m,
        verdict=verdict,
    )


def delta(p_star: RateParameters, s):
    """Magnitude of the second-order sQSSA correction, relative to ``e_T``.

    ``|K_M [s (k2 e_T - k0) - k0 K_M]| / (k1 (s + K_M)^4)``
    """
    if not p_star.k1 > 0:
        raise ParameterError("delta needs k1 > 0")
    K_M = p_star.K_M
    s = np.asarray(s, dtype=float)
    margin = p_star.k2 * p_star.e_T - p_star.k0
    out = np.abs(K_M * (s * margin - p_star.k0 * K_M)) / (p_star.k1 * (s + K_M) ** 4)
    return out if out.ndim else float(out)


def delta_max(p: RateParameters) -> float:
    """Closed-form interior maximum of :func:`delta` (requires ``k2 e_T > k0``)."""
    if not p.k2 * p.e_T > p.k0:
        raise ParameterError("delta has an interior maximum only when k2 e_T > k0")
    one_minus_alpha = 1 - p.k0 / (p.k2 * p.e_T)
    return 27 * p.k2 * p.e_T * one_minus_alpha ** 4 / (256 * p.k1 * p.K_M ** 2)


def delta_argmax(p: RateParameters) -> float:
    """Location of the interior maximum of :func:`delta`."""
    margin = p.k2 * p.e_T - p.k0
    if not margin > 0:
        raise ParameterError("delta has an interior maximum only when k2 e_T > k0")
    K_M = p.K_M
    return (margin * K_M + 4 * p.k0 * K_M) / (3 * margin)


_threshold_lock = threading.Lock()
_threshold: float | None = None


def switch_threshold() -> float:
    """Root in (0, 1) of ``(27/256)(1 - x)^4 - x``; cached after the first call."""
    global _threshold
    if _threshold is None:
        with _threshold_lock:
            if _threshold is None:
                _threshold = bisect(_threshold_gap, 0.0, 0.5, xtol=1e-15, maxiter=200)
    return _threshold


def _threshold_gap(x):
    return 27 / 256 * (1 - x) ** 4 - x


def gronwall_bound(p: RateParameters, L0: float, t):
    """Bound on the distance ``|c - w(s)|`` to the QSS variety at time ``t``.

    ``sqrt(L0^2 exp(-tau0 t) + (eps_c k0/tau0)^2)`` for trajectories that
    start in the wedge between the nullclines.
    """
    tau0 = p.k_m1 + p.k2
    if not tau0 > 0:
        raise ParameterError("k_m1 + k2 must be positive")
    eps_c = p.k1 * p.e_T / tau0
    t = np.asarray(t, dtype=float)
    out = np.sqrt(L0 ** 2 * np.exp(-tau0 * t) + (eps_c * p.k0 / tau0) ** 2)
    return out if out.ndim else float(out)


def stoleriu_ratio(p: RateParameters, s0: float) -> float:
    """``e_T / (s0 + K_M/(1 - alpha) + k0/k2)``; small means the condition holds."""
    if not (p.k1 > 0 and p.k2 > 0):
        raise ParameterError("stoleriu_ratio needs k1 > 0 and k2 > 0")
    if p.e_T == 0:
        return 0.0
    alpha = p.k0 / (p.k2 * p.e_T)
    if alpha >= 1:
        raise ParameterError("stoleriu_ratio is defined only for k0 < k2 e_T")
    return p.e_T / (s0 + p.K_M / (1 - alpha) + p.k0 / p.k2)


def qss_variety(p: RateParameters, s):
    """``w(s) = k1 e_T s/(k1 s + k_m1 + k2)``, the curve where ``dc/dt = 0``."""
    s = np.asarray(s, dtype=float)
    den = p.k1 * s + p.k_m1 + p.k2
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(den > 0, p.k1 * p.e_T * s / np.where(den > 0, den, 1.0), p.e_T)
    return w if w.ndim else float(w)


def qss_defect(p: RateParameters, s):
    """Lie-derivative defect ``k1 (e_T - w)(k0 - k2 w)`` of the QSS variety.

    Vanishes at ``s`` exactly when the vector field is tangent to the variety
    there.
    """
    w = qss_variety(p, s)
    out = p.k1 * (p.e_T - w) * (p.k0 - p.k2 * w)
    return out if np.ndim(out) else float(out)


def variety_distance(p: RateParameters, s, c):
    """``|c - w(s)|``."""
    return np.abs(np.asarray(c, dtype=float) - qss_variety(p, s))


def annotations(d: QssaDiagnostics) -> dict[str, str]:
    """Plain-language qualifiers printed next to the numbers."""
    notes = {
        "eps_o": "eps_o << 10 suffices when alpha < switch threshold",
        "switch_threshold": f"{switch_threshold():.4f}",
    }
    if d.verdict is Verdict.INFLOW_EXCEEDS_CAPACITY:
        notes["verdict"] = "no positive steady state; delta0 << 1 governs the sQSSA error"
    elif d.verdict is Verdict.USE_DELTA_M:
        notes["verdict"] = "delta_m << 1 governs the sQSSA error"
    else:
        notes["verdict"] = "delta0 << 1 governs the sQSSA error"
    if math.isfinite(d.eps_star):
        notes["eps_star"] = "dimensional (concentration); delta0 = eps_star/e_T"
    return notes
