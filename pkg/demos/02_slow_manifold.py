# %% [markdown]
# # Slow manifold from the invariance equation
#
# The iteration starts from c = 0; its first step is the sQSSA curve.  Raw
# fixed-point steps stall after a few updates, so the solver switches to
# damped Newton.

# %%
import numpy as np

from qssa_lab import (ManifoldCurve, RateParameters, axis_crossing, fraser_step,
                      nullclines, slow_manifold)

p = RateParameters(2.5, 1.0, 1.0, 1.0, 3.0)
grid = np.linspace(0.0, 30.0, 301)

curves = [ManifoldCurve.zero(grid)]
for _ in range(6):
    curves.append(fraser_step(p, curves[-1]))
print("fixed-point sup deltas:",
      [round(float(np.max(np.abs(b.c_values - a.c_values))), 4)
       for a, b in zip(curves, curves[1:])])

# %%
curve, report = slow_manifold(p, grid)
print("converged:", report.converged, "methods:", report.methods)
print("residual:", curve.residual_sup, "crosses c=0 at s =", axis_crossing(curve))

# %% [markdown]
# The curve lies between the two nullclines up to the equilibrium.

# %%
nc = nullclines(p)
s = grid[(grid > 3) & (grid < 20)]
print(bool(np.all((nc.N_s(s) <= curve(s)) & (curve(s) <= nc.N_c(s)))))
