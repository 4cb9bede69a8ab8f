# %% [markdown]
# # Behaviour at infinity
#
# Stationary points on the equator of the Poincare sphere and the
# trajectory that connects P1 with the finite equilibrium.

# %%
import numpy as np

from qssa_lab import RateParameters, classify_infinity, distinguished_trajectory, slow_manifold

for k0 in (2.5, 3.5):
    p = RateParameters(k0, 1.0, 1.0, 1.0, 3.0)
    cls = classify_infinity(p)
    print(k0, {name: cls[name].label.value for name in ("P1", "P2", "P3")})

# %% [markdown]
# In the node case the distinguished trajectory coincides with the slow
# manifold computed from the invariance equation.

# %%
p = RateParameters(2.5, 1.0, 1.0, 1.0, 3.0)
dt = distinguished_trajectory(p)
curve, _ = slow_manifold(p)
s, c = dt.trajectory["s"], dt.trajectory["c"]
mask = s <= curve.s_max
print(dt.case, "endpoint", dt.endpoint, "max gap", np.max(np.abs(c[mask] - curve(s[mask]))))
