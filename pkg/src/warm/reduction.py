"""Splitting a WARM graph into vertex-disjoint connected clusters and composing their equilibria.

If the vertex set is partitioned into connected clusters and every edge
between clusters carries zero weight, the parent Jacobian is block
triangular: one block per cluster, and ``-1`` for each zero edge.  So an
equilibrium assembled from cluster equilibria is stable exactly when every
cluster equilibrium is.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .dynamics import drift
from .equilibria import (
    CRITICAL,
    STABLE,
    UNSTABLE,
    Equilibrium,
    NotEquilibriumError,
    classify,
    find_equilibria,
)
from .families import star_equilibria
from .model import GraphSpec, ModelError, WarmModel, graph_to_warm

MAX_VERTICES = 12
EMBED_TOL = 1e-10


class ReductionError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    """Block composition disagrees with the dense classification of the parent."""


@dataclass(frozen=True)
class SpanningCollection:
    """Vertex-disjoint connected clusters covering ``graph``; ``part_edges[j]`` are parent edge indices."""

    graph: GraphSpec
    parts: tuple[tuple[int, ...], ...]
    part_edges: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen = sorted(v for p in self.parts for v in p)
        if seen != list(range(self.graph.n_v)):
            raise ReductionError("parts must partition the vertex set")
        for p, es in zip(self.parts, self.part_edges):
            if len(p) < 2:
                raise ReductionError(f"part {p} has fewer than 2 vertices")
            if not es:
                raise ReductionError(f"part {p} has no edges")
            for e in es:
                a, b = self.graph.edges[e]
                if a not in p or b not in p:
                    raise ReductionError(f"edge {e} leaves part {p}")
            sub = _subgraph(self.graph, p, es)
            if not sub.connected:
                raise ReductionError(f"part {p} is not connected by its edges")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(e for es in self.part_edges for e in es))

    def part_graph(self, j: int) -> GraphSpec:
        return _subgraph(self.graph, self.parts[j], self.part_edges[j])

    def scale(self, j: int) -> float:
        return len(self.parts[j]) / self.graph.n_v

    def parts_dict(self) -> list[dict]:
        return [{"vertices": list(p), "edges": list(es)} for p, es in zip(self.parts, self.part_edges)]


def _subgraph(g: GraphSpec, vertices: Sequence[int], edges: Sequence[int]) -> GraphSpec:
    index = {v: i for i, v in enumerate(vertices)}
    return GraphSpec(len(vertices), tuple((index[g.edges[e][0]], index[g.edges[e][1]]) for e in edges))


def _vertex_partitions(g: GraphSpec) -> Iterator[list[tuple[int, ...]]]:
    """Partitions into blocks of size >= 2 that induce connected subgraphs.

    Each block is chosen as the one holding the smallest unassigned vertex,
    so every partition is produced once.
    """

    def rec(free: tuple[int, ...]):
        if not free:
            yield []
            return
        first, rest = free[0], free[1:]
        for size in range(1, len(rest) + 1):
            if len(rest) - size == 1:
                continue  # a single vertex would be left over
            for others in combinations(rest, size):
                block = (first,) + others
                if len(g.component_of(first, set(block))) != len(block):
                    continue
                left = tuple(v for v in rest if v not in others)
                for tail in rec(left):
                    yield [block] + tail

    yield from rec(tuple(range(g.n_v)))


def enumerate_spanning_collections(g: GraphSpec) -> list[SpanningCollection]:
    """All partitions into connected clusters of at least two vertices, each taken with its induced edges."""
    if g.n_v > MAX_VERTICES:
        raise ReductionError(f"exhaustive enumeration is limited to {MAX_VERTICES} vertices")
    return [
        SpanningCollection(g, tuple(parts), tuple(g.induced_edges(p) for p in parts))
        for parts in _vertex_partitions(g)
    ]


def part_model(collection: SpanningCollection, j: int, alpha: float) -> WarmModel:
    return graph_to_warm(collection.part_graph(j), alpha)


def embed_equilibrium(
    collection: SpanningCollection,
    part_points: Sequence,
    alpha: float,
    tol: float = EMBED_TOL,
) -> np.ndarray:
    """Parent point with ``v_e = |V_j| / |V| * (part value)`` on cluster ``j``'s edges and 0 elsewhere."""
    g = collection.graph
    if len(part_points) != len(collection.parts):
        raise ReductionError("need one point per part")
    x = np.zeros(g.n_edges)
    for j, (es, p) in enumerate(zip(collection.part_edges, part_points)):
        p = np.asarray(p, dtype=float)
        if p.shape != (len(es),):
            raise ReductionError(f"part {j} point has {p.size} entries, expected {len(es)}")
        x[list(es)] = collection.scale(j) * p
    model = graph_to_warm(g, alpha)
    try:
        res = float(np.max(np.abs(drift(model, x))))
    except ValueError as exc:
        raise ReductionError(f"embedded point is degenerate: {exc}") from exc
    if not res < tol:
        raise ReductionError(f"embedded point has residual {res:.3e} under the parent model")
    return x


def combine_classes(classes: Sequence[str]) -> str:
    if UNSTABLE in classes:
        return UNSTABLE
    if CRITICAL in classes:
        return CRITICAL
    return STABLE


def compose_stability(
    collection: SpanningCollection,
    part_equilibria: Sequence[Equilibrium],
    alpha: float,
    verify: bool = True,
) -> tuple[str, np.ndarray]:
    """Stability of the embedded point from the cluster classifications.

    With ``verify`` the parent point is also classified densely and a
    disagreement raises :class:`ConsistencyError`.
    """
    x = embed_equilibrium(collection, [e.point for e in part_equilibria], alpha)
    cls = combine_classes([e.classification for e in part_equilibria])
    if verify:
        dense = classify(graph_to_warm(collection.graph, alpha), x)
        if dense.classification != cls:
            raise ConsistencyError(
                f"blocks give {cls} but the parent spectrum gives {dense.classification} "
                f"(top real part {dense.max_real:.3e})"
            )
    return cls, x


# --- star forests ---------------------------------------------------------------


@dataclass
class Allocation:
    collection: SpanningCollection
    point: np.ndarray
    classification: str
    equilibrium: Equilibrium | None = None

    def to_dict(self) -> dict:
        return {
            "parts": self.collection.parts_dict(),
            "v": [float(c) for c in self.point],
            "class": self.classification,
        }


def _spanning_stars(g: GraphSpec, block: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Edge sets of the stars inside ``g`` that touch every vertex of ``block``."""
    if len(block) == 2:
        e = g.induced_edges(block)
        return [e] if e else []
    out = []
    for c in block:
        nb = set(g.neighbours(c))
        if all(v in nb for v in block if v != c):
            out.append(tuple(sorted(e for e in g.incident[c] if set(g.edges[e]) <= set(block))))
    return out


def star_part_point(n_leaves: int, alpha: float) -> np.ndarray:
    """An equilibrium of the star with ``n_leaves`` edges that is stable or critical at ``alpha``.

    The uniform point while ``alpha <= n_leaves + 1``, otherwise the branch
    with a single large leaf that grows with ``alpha``.
    """
    if n_leaves == 1 or alpha <= n_leaves + 1:
        return np.full(n_leaves, 1.0 / n_leaves)
    (e,) = [s for s in star_equilibria(n_leaves, 1, alpha) if s.branch == "increasing"]
    return e.point


def enumerate_star_forests(g: GraphSpec) -> list[SpanningCollection]:
    """Spanning collections whose parts are stars (any star on the cluster, not only induced ones)."""
    if g.n_v > MAX_VERTICES:
        raise ReductionError(f"exhaustive enumeration is limited to {MAX_VERTICES} vertices")
    out = []
    for parts in _vertex_partitions(g):
        choices = [_spanning_stars(g, p) for p in parts]
        if not all(choices):
            continue

        def rec(j, acc):
            if j == len(parts):
                out.append(SpanningCollection(g, tuple(parts), tuple(acc)))
                return
            for es in choices[j]:
                rec(j + 1, acc + [es])

        rec(0, [])
    return out


def star_forest_allocation(g: GraphSpec, alpha: float) -> list[Allocation]:
    """A stable-or-critical allocation for every star forest of ``g``, each checked densely."""
    model = graph_to_warm(g, alpha)
    out = []
    for col in enumerate_star_forests(g):
        pts = [star_part_point(len(es), alpha) for es in col.part_edges]
        x = embed_equilibrium(col, pts, alpha)
        e = classify(model, x)
        out.append(Allocation(col, x, e.classification, e))
    return out


# --- whisker-forest probe ---------------------------------------------------------


def _tree_diameter(g: GraphSpec, vertices: set[int], edges: Sequence[int]) -> int:
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for e in edges:
        a, b = g.edges[e]
        adj[a].append(b)
        adj[b].append(a)

    def farthest(src):
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for v in frontier:
                for w in adj[v]:
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            frontier = nxt
        far = max(dist, key=dist.get)
        return far, dist[far]

    end, _ = farthest(next(iter(vertices)))
    return farthest(end)[1]


def is_whisker_forest(g: GraphSpec, support: Sequence[int]) -> bool:
    """Do the edges in ``support`` form vertex-disjoint trees of diameter <= 3 touching every vertex?"""
    support = list(support)
    touched = {v for e in support for v in g.edges[e]}
    if len(touched) != g.n_v:
        return False
    sub = GraphSpec(g.n_v, tuple(g.edges[e] for e in support))
    seen: set[int] = set()
    for v in range(g.n_v):
        if v in seen:
            continue
        comp = sub.component_of(v)
        seen |= comp
        comp_edges = [e for e in support if g.edges[e][0] in comp]
        if len(comp_edges) != len(comp) - 1:
            return False
        if _tree_diameter(g, comp, comp_edges) > 3:
            return False
    return True


def whisker_forest_probe(g: GraphSpec, alphas: Sequence[float], n_starts: int = 50) -> list[dict]:
    """Report, for each ``alpha``, which stable equilibria have whisker-forest support.  Nothing is asserted."""
    rows = []
    for a in alphas:
        cat = find_equilibria(graph_to_warm(g, a), n_starts)
        stable = cat.by_class(STABLE)
        bad = [list(e.support) for e in stable if not is_whisker_forest(g, e.support)]
        rows.append(
            {
                "alpha": float(a),
                "stable": len(stable),
                "whisker_forest": len(stable) - len(bad),
                "other_supports": bad,
            }
        )
    return rows


__all__ = [
    "Allocation",
    "ConsistencyError",
    "ModelError",
    "NotEquilibriumError",
    "ReductionError",
    "SpanningCollection",
    "combine_classes",
    "compose_stability",
    "embed_equilibrium",
    "enumerate_spanning_collections",
    "enumerate_star_forests",
    "is_whisker_forest",
    "part_model",
    "star_forest_allocation",
    "star_part_point",
    "whisker_forest_probe",
]
