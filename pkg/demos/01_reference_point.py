# %% [markdown]
# # The reference point k0=2.5, eT=1, k1=1, km1=1, k2=3
#
# Equilibrium, validity diagnostics, and how well the standard reduction
# tracks the full system from an empty start.

# %%
import numpy as np

from qssa_lab import (IntegratorConfig, RateParameters, ReductionKind, compare_trajectories,
                      equilibrium, integrate, qssa_diagnostics, reduced_model, simulate)

p = RateParameters(2.5, 1.0, 1.0, 1.0, 3.0)
eq = equilibrium(p)
print(eq.kind.value, eq.s_hat, eq.c_hat, eq.eigenvalues)

# %%
d = qssa_diagnostics(p)
for key, value in d.to_dict().items():
    print(f"{key:>10}: {value}")

# %% [markdown]
# The slow eigenvalue is about -0.02, so the approach to the node takes
# hundreds of time units.  The (k0, k2) reduction is built for small k0 and
# k2; at this point its own fixed point sits at s = 5, far from s = 20, so
# a large error is expected.

# %%
cfg = IntegratorConfig(1e-10, 1e-12)
full = simulate(p, (0.0, 0.0), 400.0, cfg)
print("state at t=400:", full.final)

for kind in (ReductionKind.SQSSA, ReductionKind.FENICHEL_K0K2):
    model = reduced_model(p, kind)
    red = integrate(model.vector_field(), [model.map_initial(0.0, 0.0)], (0.0, 400.0), cfg,
                    names=("s",))
    err = compare_trajectories(full, red, window=(1.0, 400.0))
    print(f"{kind.cli_name:>14}: sup |s - s_red| on [1, 400] = {err:.4f}")

# %%
s = np.linspace(0.0, 30.0, 7)
print(np.column_stack([s, reduced_model(p, ReductionKind.SQSSA).manifold_c(s),
                       reduced_model(p, ReductionKind.QEA).manifold_c(s)]))
