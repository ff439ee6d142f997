"""The two-edge star: the uniform split loses stability at alpha = 3.

Above 3 a pair of asymmetric stable points (v, 1 - v) branches off; ``v``
grows with alpha but stays below 2/3.
"""

from warm import build_star, find_equilibria, graph_to_warm

for alpha in (2.0, 2.9, 3.0, 3.1, 4.0, 6.0, 10.0, 40.0):
    cat = find_equilibria(graph_to_warm(build_star(2), alpha))
    rows = ", ".join(f"{e.point[0]:.4f} ({e.classification})" for e in cat)
    print(f"alpha = {alpha:5.1f}: v = {rows}")
