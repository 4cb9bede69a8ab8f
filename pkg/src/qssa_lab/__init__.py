"""Analysis toolkit for the Michaelis-Menten mechanism with substrate inflow."""

from .diagnostics import (QssaDiagnostics, Verdict, delta, delta_argmax, delta_max,
                          gronwall_bound, qss_defect, qss_variety, qssa_diagnostics,
                          stoleriu_ratio, switch_threshold)
from .errors import (ConvergenceError, IntegrationError, JacobianMismatchError,
                     NormalHyperbolicityError, NumericalError, ParameterError, QssaLabError)
from .integrate import (CompareMode, IntegratorConfig, Termination, Trajectory,
                        compare_trajectories, integrate, simulate)
from .manifold import (IterationReport, ManifoldCurve, axis_crossing, fraser_step,
                       invariance_residual, perturbation_series, slow_manifold)
from .model import (Equilibrium, EquilibriumKind, ParameterFamily, RateParameters, State,
                    classify_parameter_point, equilibrium, jacobian, ray_scale,
                    recover_full_state, rhs, vector_field)
from .phase_plane import Nullclines, divergence, nullclines, wedge_inflow_check
from .poincare import (Chart, InfinityLabel, chart_rhs, classify_infinity,
                       distinguished_trajectory)
from .reductions import (ReducedModel, ReductionKind, fenichel_projection, reduced_model)

__version__ = "0.1.0"
