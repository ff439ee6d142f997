"""Finite urn runs against the mean-field flow on the triangle at alpha = 2.

The flow from a random start settles on a permutation of (1/2, 1/2, 0) and
so do most urn runs, even though the urn starts from the barycentre, which
is an unstable equilibrium of the flow.
"""

import numpy as np

from warm import build_cycle, find_equilibria, flow, graph_to_warm
from warm.simulate import batch

model = graph_to_warm(build_cycle(3), 2.0)
cat = find_equilibria(model)

rng = np.random.default_rng(3)
for _ in range(3):
    v0 = rng.dirichlet(np.ones(3))
    traj = flow(model, v0, t_max=100.0)
    print("flow", np.round(v0, 3), "->", np.round(traj.final, 4), traj.stop_reason)

res = batch(model, runs=40, steps=50_000, base_seed=0, catalog=cat)
print("urn endpoints by catalog entry:")
for key, count in sorted(res.histogram.items(), key=lambda kv: str(kv[0])):
    label = "unresolved" if key == "unresolved" else np.round(cat.equilibria[key].point, 3)
    print(f"    {label}: {count}")
