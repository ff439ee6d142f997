"""Branches of the triangle as alpha grows.

Prints, for a handful of exponents, every equilibrium of the three-edge
cycle with its class.  Watch the (v, v, u) branch disappear at 4/3 and the
(v, u, 0) branch appear past 3.
"""

import numpy as np

from warm import build_cycle, find_equilibria, graph_to_warm

for alpha in (1.2, 1.5, 2.0, 3.0, 3.5, 6.0):
    cat = find_equilibria(graph_to_warm(build_cycle(3), alpha))
    print(f"alpha = {alpha}: {len(cat)} equilibria")
    for e in cat:
        pt = np.array2string(np.sort(e.point)[::-1], precision=4)
        print(f"    {pt:28s} {e.classification:9s} max Re = {e.max_real:+.4f}")
