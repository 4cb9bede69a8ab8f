"""Rate parameters, the planar mass-action vector field and its equilibria.

The open Michaelis-Menten mechanism

    -> S,   S + E <-> C -> E + P

reduces (using ``e + c = e_T``) to the planar system

    ds/dt = k0 - k1 (e_T - c) s + k_m1 c
    dc/dt = k1 (e_T - c) s - (k_m1 + k2) c

Everything else in the package is built on :class:`RateParameters` and
:func:`rhs` defined here.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .errors import NumericalError, ParameterError

if TYPE_CHECKING:
    from .integrate import Trajectory

# JSON key <-> attribute name
_JSON_KEYS = {"k0": "k0", "eT": "e_T", "k1": "k1", "km1": "k_m1", "k2": "k2"}


@dataclass(frozen=True)
class RateParameters:
    """The five rate constants plus total enzyme.

    Attributes
    ----------
    k0 : float
        Substrate inflow rate (concentration/time).
    e_T : float
        Total enzyme concentration.
    k1 : float
        Binding rate constant (1/(concentration*time)).
    k_m1 : float
        Unbinding rate constant (1/time).
    k2 : float
        Catalytic rate constant (1/time).

    Positional order is ``(k0, e_T, k1, k_m1, k2)``.
    """

    k0: float
    e_T: float
    k1: float
    k_m1: float
    k2: float

    def __post_init__(self):
        for name in ("k0", "e_T", "k1", "k_m1", "k2"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f"{name} must be a number, got {value!r}") from None
            if not math.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be finite and nonnegative, got {value}")
            object.__setattr__(self, name, value)

    @property
    def K_M(self) -> float:
        """Michaelis constant ``(k_m1 + k2)/k1`` (``inf`` when ``k1 == 0``)."""
        if self.k1 == 0:
            return math.inf
        return (self.k_m1 + self.k2) / self.k1

    @property
    def K_S(self) -> float:
        """Dissociation constant ``k_m1/k1``."""
        if self.k1 == 0:
            return math.inf
        return self.k_m1 / self.k1

    K_E = K_S

    @property
    def v_max(self) -> float:
        return self.k2 * self.e_T

    @property
    def alpha(self) -> float:
        """Inflow relative to clearance capacity, ``k0/(k2 e_T)``."""
        if self.v_max == 0:
            return math.inf if self.k0 > 0 else math.nan
        return self.k0 / self.v_max

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.k0, self.e_T, self.k1, self.k_m1, self.k2)

    def replace(self, **changes) -> RateParameters:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, float]:
        return {key: getattr(self, attr) for key, attr in _JSON_KEYS.items()}

    @classmethod
    def from_dict(cls, data: dict) -> RateParameters:
        missing = [key for key in _JSON_KEYS if key not in data]
        if missing:
            raise ParameterError(f"missing parameter keys: {', '.join(missing)}")
        extra = set(data) - set(_JSON_KEYS)
        if extra:
            raise ParameterError(f"unknown parameter keys: {', '.join(sorted(extra))}")
        return cls(**{attr: data[key] for key, attr in _JSON_KEYS.items()})


class State(NamedTuple):
    s: float
    c: float


def rhs(p: RateParameters, x) -> np.ndarray:
    """Evaluate the planar vector field at ``x = (s, c)``.

    ``x`` may hold arrays, in which case the result has shape ``(2, ...)``.
    """
    s, c = x
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    binding = p.k1 * (p.e_T - c) * s
    ds = p.k0 - binding + p.k_m1 * c
    dc = binding - (p.k_m1 + p.k2) * c
    return np.array([ds, dc])


def vector_field(p: RateParameters):
    """Return ``f(t, y)`` suitable for :func:`qssa_lab.integrate.integrate`."""
    k0, e_T, k1, k_m1, k2 = p.as_tuple()
    kk = k_m1 + k2

    def f(t, y):
        s, c = y
        binding = k1 * (e_T - c) * s
        return np.array([k0 - binding + k_m1 * c, binding - kk * c])

    return f


def jacobian(p: RateParameters, x) -> np.ndarray:
    s, c = x
    free = p.k1 * (p.e_T - c)
    bound = p.k1 * s + p.k_m1
    return np.array([[-free, bound], [free, -(bound + p.k2)]])


# ---------------------------------------------------------------------------
# equilibria

class EquilibriumKind(enum.Enum):
    ATTRACTING_NODE_FIRST_QUADRANT = "AttractingNodeFirstQuadrant"
    SADDLE_SECOND_QUADRANT = "SaddleSecondQuadrant"
    NONE_AT_INFINITY_BALANCE = "NoneAtInfinityBalance"
    DEGENERATE_FAMILY = "DegenerateFamily"


@dataclass(frozen=True)
class Equilibrium:
    s_hat: float
    c_hat: float
    kind: EquilibriumKind
    eigenvalues: tuple[float, ...] = ()

    @property
    def state(self) -> State:
        return State(self.s_hat, self.c_hat)


def is_degenerate(p: RateParameters) -> bool:
    """True when the plane carries a continuum of stationary points."""
    return p.k0 == 0 and (p.k1 == 0 or p.e_T == 0 or p.k2 == 0)


def equilibrium(p: RateParameters) -> Equilibrium | None:
    """Locate and classify the unique finite stationary point.

    Returns ``None`` when there is no stationary point and the family is not
    degenerate (``k1 == 0`` or ``k2 == 0`` with ``k0 > 0``).  The balanced
    case ``k2 e_T == k0`` is reported with NaN coordinates.

    The node/saddle label is read off the eigenvalues of the Jacobian and
    checked against the sign of ``k2 e_T - k0``.
    """
    nan = math.nan
    if is_degenerate(p):
        return Equilibrium(nan, nan, EquilibriumKind.DEGENERATE_FAMILY)
    if p.k1 == 0 or p.k2 == 0:
        return None
    margin = p.k2 * p.e_T - p.k0
    if margin == 0:
        return Equilibrium(nan, nan, EquilibriumKind.NONE_AT_INFINITY_BALANCE)

    s_hat = (p.k_m1 + p.k2) * p.k0 / (p.k1 * margin)
    c_hat = p.k0 / p.k2
    eig = np.linalg.eigvals(jacobian(p, (s_hat, c_hat)))
    if np.max(np.abs(eig.imag)) > 1e-12 * np.max(np.abs(eig)):
        raise NumericalError(f"complex eigenvalues {eig} at the equilibrium")
    eig = np.sort(eig.real)
    if eig[1] < 0:
        kind = EquilibriumKind.ATTRACTING_NODE_FIRST_QUADRANT
    elif eig[0] < 0 < eig[1]:
        kind = EquilibriumKind.SADDLE_SECOND_QUADRANT
    else:
        raise NumericalError(f"unexpected eigenvalues {eig} at the equilibrium")
    expected = (EquilibriumKind.ATTRACTING_NODE_FIRST_QUADRANT if margin > 0
                else EquilibriumKind.SADDLE_SECOND_QUADRANT)
    if kind is not expected:
        raise NumericalError(
            f"eigenvalue classification {kind.value} contradicts sign of k2*e_T - k0 = {margin}")
    return Equilibrium(s_hat, c_hat, kind, tuple(float(v) for v in eig))


# ---------------------------------------------------------------------------
# parameter families

class ParameterFamily(enum.Enum):
    TFPV_K0_ET = "TFPV_k0_eT"
    TFPV_K0_K1 = "TFPV_k0_k1"
    TFPV_K0_K2 = "TFPV_k0_k2"
    QSSPV_ET = "QSSPV_eT"
    QSSPV_K1 = "QSSPV_k1"
    QSSPV_K0_K2 = "QSSPV_k0_k2"
    QSSPV_KM1_K2 = "QSSPV_km1_k2"
    GENERIC = "Generic"

    @property
    def components(self) -> tuple[str, ...]:
        """Attribute names that vanish on this family."""
        return _FAMILY_COMPONENTS[self]

    @property
    def is_tfpv(self) -> bool:
        return self in TFPV_FAMILIES


_FAMILY_COMPONENTS = {
    ParameterFamily.TFPV_K0_ET: ("k0", "e_T"),
    ParameterFamily.TFPV_K0_K1: ("k0", "k1"),
    ParameterFamily.TFPV_K0_K2: ("k0", "k2"),
    ParameterFamily.QSSPV_ET: ("e_T",),
    ParameterFamily.QSSPV_K1: ("k1",),
    ParameterFamily.QSSPV_K0_K2: ("k0", "k2"),
    ParameterFamily.QSSPV_KM1_K2: ("k_m1", "k2"),
    ParameterFamily.GENERIC: (),
}

TFPV_FAMILIES = (ParameterFamily.TFPV_K0_ET, ParameterFamily.TFPV_K0_K1,
                 ParameterFamily.TFPV_K0_K2)

# parameters sharing a physical dimension
_UNIT_GROUPS = {"k0": ("k0",), "e_T": ("e_T",), "k1": ("k1",),
                "k_m1": ("k_m1", "k2"), "k2": ("k_m1", "k2")}


def classify_parameter_point(p: RateParameters, tol: float = 1e-12,
                             reference: RateParameters | None = None) -> list[ParameterFamily]:
    """List every TFPV / QSS-parameter family that ``p`` lies on.

    A component counts as zero when its magnitude is at most ``tol`` times the
    largest parameter of the same physical dimension.  Only ``k_m1`` and
    ``k2`` share a dimension, so by default ``k0``, ``e_T`` and ``k1`` must be
    exactly zero; pass ``reference`` (for instance the base point of a ray)
    to measure them against that point instead.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    ref = reference if reference is not None else p

    def vanishes(name):
        scale = max(abs(getattr(ref, other)) for other in _UNIT_GROUPS[name])
        return abs(getattr(p, name)) <= tol * scale

    found = [fam for fam in ParameterFamily
             if fam is not ParameterFamily.GENERIC and all(vanishes(c) for c in fam.components)]
    return found or [ParameterFamily.GENERIC]


def ray_scale(p_star: RateParameters, family: ParameterFamily, eps: float) -> RateParameters:
    """Multiply the two components that define a TFPV family by ``eps``."""
    if not family.is_tfpv:
        raise ParameterError(f"{family.value} is not a TFPV family")
    if not eps >= 0:
        raise ParameterError("eps must be nonnegative")
    return p_star.replace(**{name: eps * getattr(p_star, name) for name in family.components})


# ---------------------------------------------------------------------------

def recover_full_state(p: RateParameters, traj: Trajectory, p0: float = 0.0) -> Trajectory:
    """Rebuild ``(s, e, c, p)`` from a planar trajectory.

    Free enzyme comes from the conservation law; product is ``p0`` plus the
    trapezoid-rule integral of ``k2 c`` on the trajectory's own time grid.
    """
    from scipy.integrate import cumulative_trapezoid

    from .integrate import Trajectory

    s = traj["s"]
    c = traj["c"]
    product = p0 + cumulative_trapezoid(p.k2 * c, traj.times, initial=0.0)
    states = np.column_stack([s, p.e_T - c, c, product])
    return Trajectory(traj.times.copy(), states, ("s", "e", "c", "p"),
                      step_rejections=traj.step_rejections, termination=traj.termination)
