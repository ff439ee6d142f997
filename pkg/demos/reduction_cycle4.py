"""Stable allocations of the four-cycle built from two single-edge pieces.

The four-cycle splits into two opposite edges; each piece is trivially
stable, so the embedded point (1/2, 0, 1/2, 0) is stable too, while the
uniform point is unstable for every alpha.
"""

from warm import build_cycle, classify, graph_to_warm
from warm.reduction import enumerate_spanning_collections, star_forest_allocation

g = build_cycle(4)
for c in enumerate_spanning_collections(g):
    print("collection", c.parts, "edges", c.support)

for alpha in (1.5, 3.0, 10.0):
    allocs = star_forest_allocation(g, alpha)
    print(f"alpha = {alpha}:", [(a.point.tolist(), a.classification) for a in allocs])
    print("    uniform point is", classify(graph_to_warm(g, alpha), [0.25] * 4).classification)
