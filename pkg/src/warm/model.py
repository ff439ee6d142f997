"""WARM instances: colours, exponent and the law of the competing subset.

Subsets of colours are stored as integer bit masks (bit ``i`` set means colour
``i`` belongs to the subset), which caps the colour count at 64.  Enumerating
builders are further capped at 20 colours.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

MAX_COLOURS = 64
MAX_ENUMERATED = 20
PROB_TOL = 1e-12


class ModelError(ValueError):
    """An invariant of a model, distribution or graph is violated."""


def mask_of(colours: Iterable[int]) -> int:
    mask = 0
    for c in colours:
        mask |= 1 << int(c)
    return mask


def colours_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class SubsetDistribution:
    """Law of the random subset ``A_t`` over ``n`` colours.

    ``masks[j]`` is drawn with probability ``probs[j]``.  Validation happens on
    construction and raises :class:`ModelError` naming the first broken
    invariant.
    """

    n: int
    masks: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_COLOURS:
            raise ModelError(f"colour count must be in [1, {MAX_COLOURS}], got {self.n}")
        if len(self.masks) != len(self.probs) or not self.masks:
            raise ModelError("need a nonempty list of (subset, probability) entries")
        full = (1 << self.n) - 1
        for m, p in zip(self.masks, self.probs):
            if m == 0:
                raise ModelError("empty subset has positive probability (p_empty must be 0)")
            if m & ~full:
                raise ModelError(f"subset {colours_of(m)} uses a colour outside [0, {self.n})")
            if not (0.0 < p <= 1.0 + PROB_TOL) or not math.isfinite(p):
                raise ModelError(f"probability {p} of subset {colours_of(m)} not in (0, 1]")
        if len(set(self.masks)) != len(self.masks):
            raise ModelError("subsets must be distinct")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ModelError(f"probabilities sum to {total!r}, not 1")
        covered = 0
        for m in self.masks:
            covered |= m
        if covered != full:
            missing = colours_of(full & ~covered)
            raise ModelError(f"colours {missing} never appear in a subset")

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[tuple[Iterable[int], float]]) -> "SubsetDistribution":
        masks, probs = [], []
        for colours, p in entries:
            masks.append(mask_of(colours))
            probs.append(float(p))
        return cls(n, tuple(masks), tuple(probs))

    def __len__(self) -> int:
        return len(self.masks)

    @cached_property
    def incidence(self) -> np.ndarray:
        """``(len(self), n)`` 0/1 float matrix; row ``j`` indicates ``masks[j]``."""
        M = np.zeros((len(self.masks), self.n))
        for j, m in enumerate(self.masks):
            M[j, list(colours_of(m))] = 1.0
        M.setflags(write=False)
        return M

    @cached_property
    def prob_array(self) -> np.ndarray:
        p = np.array(self.probs, dtype=float)
        p.setflags(write=False)
        return p

    @cached_property
    def sizes(self) -> np.ndarray:
        return self.incidence.sum(axis=1).astype(int)

    def subsets(self) -> list[tuple[tuple[int, ...], float]]:
        return [(colours_of(m), p) for m, p in zip(self.masks, self.probs)]

    def canonical(self) -> tuple[tuple[int, float], ...]:
        """Entries sorted by mask; two distributions are equal iff these agree to tolerance."""
        return tuple(sorted(zip(self.masks, self.probs)))

    def isclose(self, other: "SubsetDistribution", tol: float = PROB_TOL) -> bool:
        if self.n != other.n or len(self) != len(other):
            return False
        a, b = self.canonical(), other.canonical()
        return all(ma == mb and abs(pa - pb) <= tol for (ma, pa), (mb, pb) in zip(a, b))

    def relabel(self, perm: Sequence[int]) -> "SubsetDistribution":
        """Colour ``i`` becomes colour ``perm[i]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n)):
            raise ModelError("relabelling must be a permutation of the colours")
        masks = tuple(mask_of(perm[c] for c in colours_of(m)) for m in self.masks)
        return SubsetDistribution(self.n, masks, self.probs)


@dataclass(frozen=True)
class WarmModel:
    """A WARM with power reinforcement ``W(x) = x**alpha``."""

    dist: SubsetDistribution
    alpha: float
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not (self.alpha > 1.0) or not math.isfinite(self.alpha):
            raise ModelError(f"alpha must be a finite real > 1, got {self.alpha}")

    @property
    def n(self) -> int:
        return self.dist.n

    def with_alpha(self, alpha: float) -> "WarmModel":
        return WarmModel(self.dist, float(alpha), self.label)


def _merge(n: int, entries: Iterable[tuple[int, float]]) -> SubsetDistribution:
    acc: dict[int, float] = {}
    for m, p in entries:
        acc[m] = acc.get(m, 0.0) + p
    masks = tuple(sorted(acc))
    return SubsetDistribution(n, masks, tuple(acc[m] for m in masks))


def build_fixed_m(n: int, m: int) -> SubsetDistribution:
    """All ``C(n, m)`` subsets of size ``m``, uniformly."""
    if not 1 <= n <= MAX_ENUMERATED:
        raise ModelError(f"n={n} outside the enumerable range [1, {MAX_ENUMERATED}]")
    if not 1 <= m <= n:
        raise ModelError(f"subset size m={m} must satisfy 1 <= m <= n={n}")
    masks = tuple(mask_of(c) for c in combinations(range(n), m))
    p = 1.0 / math.comb(n, m)
    return SubsetDistribution(n, masks, (p,) * len(masks))


def build_bernoulli(n: int, p: float) -> SubsetDistribution:
    """Each colour included independently with probability ``p``, conditioned on a nonempty draw."""
    if not 0.0 < p < 1.0:
        raise ModelError(f"inclusion probability must be in (0, 1), got {p}")
    if not 1 <= n <= MAX_ENUMERATED:
        raise ModelError(f"n={n} outside the enumerable range [1, {MAX_ENUMERATED}]")
    norm = 1.0 - (1.0 - p) ** n
    masks, probs = [], []
    for mask in range(1, 1 << n):
        k = mask.bit_count()
        masks.append(mask)
        probs.append(p**k * (1.0 - p) ** (n - k) / norm)
    return SubsetDistribution(n, tuple(masks), tuple(probs))


@dataclass(frozen=True)
class GraphSpec:
    """Simple undirected graph whose edges are the colours of a WARM.

    Edge ``e`` is ``edges[e]``, stored with the smaller endpoint first.
    """

    n_v: int
    edges: tuple[tuple[int, int], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.n_v < 2:
            raise ModelError(f"graph needs at least 2 vertices, got {self.n_v}")
        if not self.edges:
            raise ModelError("edge list is empty")
        norm = []
        for e in self.edges:
            a, b = (int(x) for x in e)
            if a == b:
                raise ModelError(f"self-loop at vertex {a}")
            if not (0 <= a < self.n_v and 0 <= b < self.n_v):
                raise ModelError(f"edge {(a, b)} has a vertex outside [0, {self.n_v})")
            norm.append((min(a, b), max(a, b)))
        if len(set(norm)) != len(norm):
            raise ModelError("duplicate edge")
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def incident(self) -> tuple[tuple[int, ...], ...]:
        """Edge indices incident to each vertex."""
        inc: list[list[int]] = [[] for _ in range(self.n_v)]
        for idx, (a, b) in enumerate(self.edges):
            inc[a].append(idx)
            inc[b].append(idx)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(x) for x in self.incident)

    @cached_property
    def connected(self) -> bool:
        return len(self.component_of(0)) == self.n_v

    def neighbours(self, x: int) -> list[int]:
        out = []
        for e in self.incident[x]:
            a, b = self.edges[e]
            out.append(b if a == x else a)
        return out

    def component_of(self, x: int, allowed: set[int] | None = None) -> set[int]:
        seen = {x}
        stack = [x]
        while stack:
            y = stack.pop()
            for z in self.neighbours(y):
                if z not in seen and (allowed is None or z in allowed):
                    seen.add(z)
                    stack.append(z)
        return seen

    def induced_edges(self, vertices: Iterable[int]) -> tuple[int, ...]:
        vs = set(vertices)
        return tuple(i for i, (a, b) in enumerate(self.edges) if a in vs and b in vs)


def build_star(n_leaves: int) -> GraphSpec:
    """Centre 0 joined to leaves ``1..n_leaves``; edge ``i`` is ``(0, i + 1)``."""
    if n_leaves < 1:
        raise ModelError("star needs at least 1 leaf")
    return GraphSpec(n_leaves + 1, tuple((0, i) for i in range(1, n_leaves + 1)), f"star({n_leaves})")


def build_cycle(n: int) -> GraphSpec:
    """Edge ``i`` joins vertices ``i`` and ``i + 1 (mod n)``, so edges ``i`` and ``i + 1`` are adjacent."""
    if n < 3:
        raise ModelError("cycle needs at least 3 vertices")
    return GraphSpec(n, tuple((i, (i + 1) % n) for i in range(n)), f"cycle({n})")


def build_complete(n_v: int) -> GraphSpec:
    if n_v < 3:
        raise ModelError("complete graph needs at least 3 vertices")
    return GraphSpec(n_v, tuple(combinations(range(n_v), 2)), f"complete({n_v})")


def build_path(n_edges: int) -> GraphSpec:
    if n_edges < 1:
        raise ModelError("path needs at least 1 edge")
    return GraphSpec(n_edges + 1, tuple((i, i + 1) for i in range(n_edges)), f"path({n_edges})")


def build_whisker(r: int, s: int) -> GraphSpec:
    """Two hubs joined by a distinguished edge, with ``r`` and ``s`` leaves.

    Hubs are vertices 0 and 1.  Edges ``0..r-1`` are the leaves of hub 0,
    edge ``r`` is the hub edge and edges ``r+1..r+s`` are the leaves of hub 1.
    """
    if r < 1 or s < 1:
        raise ModelError("whisker needs r >= 1 and s >= 1")
    edges = [(0, 2 + i) for i in range(r)]
    edges.append((0, 1))
    edges += [(1, 2 + r + j) for j in range(s)]
    return GraphSpec(r + s + 2, tuple(edges), f"whisker({r},{s})")


def graph_to_distribution(g: GraphSpec) -> SubsetDistribution:
    if g.n_edges > MAX_COLOURS:
        raise ModelError(f"graph has {g.n_edges} edges; at most {MAX_COLOURS} colours supported")
    entries = []
    for x, inc in enumerate(g.incident):
        if not inc:
            raise ModelError(f"vertex {x} is isolated (its incident edge set would be empty)")
        entries.append((mask_of(inc), 1.0 / g.n_v))
    return _merge(g.n_edges, entries)


def graph_to_warm(g: GraphSpec, alpha: float) -> WarmModel:
    """Uniform-vertex WARM on ``g``: the incident edges of a uniform vertex compete."""
    return WarmModel(graph_to_distribution(g), float(alpha), g.name)


@dataclass(frozen=True)
class SymmetryReport:
    strong: bool
    weak: bool
    p_m: dict[int, float]
    a_m: dict[int, int]
    min_size: int

    def size_probabilities(self, n: int) -> dict[int, float]:
        """``P(|A| = m) = n a_m p_m / m``; only meaningful when ``weak`` holds."""
        return {m: n * self.a_m[m] * self.p_m[m] / m for m in self.p_m}


def check_symmetry(dist: SubsetDistribution, tol: float = PROB_TOL) -> SymmetryReport:
    by_size: dict[int, list[tuple[int, float]]] = {}
    for m, p in zip(dist.masks, dist.probs):
        by_size.setdefault(m.bit_count(), []).append((m, p))
    weak = True
    strong = True
    p_m: dict[int, float] = {}
    a_m: dict[int, int] = {}
    for size, entries in sorted(by_size.items()):
        ps = [p for _, p in entries]
        p_m[size] = ps[0]
        if max(ps) - min(ps) > tol:
            weak = False
        counts = [0] * dist.n
        for m, _ in entries:
            for c in colours_of(m):
                counts[c] += 1
        a_m[size] = counts[0]
        if len(set(counts)) != 1:
            weak = False
        if len(entries) != math.comb(dist.n, size):
            strong = False
    strong = strong and weak
    return SymmetryReport(strong, weak, p_m, a_m, min(by_size))


# --- JSON model files -------------------------------------------------------

FAMILIES = ("star", "cycle", "complete", "path", "whisker", "fixed_m", "bernoulli", "graph")


def _need(params: dict[str, Any], *keys: str) -> list[Any]:
    missing = [k for k in keys if k not in params]
    if missing:
        raise ModelError(f"missing parameter(s) {missing}")
    return [params[k] for k in keys]


def family_graph(family: str, params: dict[str, Any]) -> GraphSpec | None:
    """Graph for graph families, ``None`` for the non-graph families."""
    if family == "star":
        (n,) = _need(params, "n")
        return build_star(int(n))
    if family == "cycle":
        (n,) = _need(params, "n")
        return build_cycle(int(n))
    if family == "complete":
        (n_v,) = _need(params, "n_v")
        return build_complete(int(n_v))
    if family == "path":
        (n,) = _need(params, "n")
        return build_path(int(n))
    if family == "whisker":
        r, s = _need(params, "r", "s")
        return build_whisker(int(r), int(s))
    if family == "triangle":
        return build_cycle(3)
    if family == "graph":
        n_v, edges = _need(params, "n_v", "edges")
        return GraphSpec(int(n_v), tuple(tuple(e) for e in edges), "graph")
    if family in ("fixed_m", "bernoulli"):
        return None
    raise ModelError(f"unknown family {family!r}; expected one of {FAMILIES}")


def build_family(family: str, params: dict[str, Any], alpha: float) -> WarmModel:
    g = family_graph(family, params)
    if g is not None:
        return graph_to_warm(g, alpha)
    if family == "fixed_m":
        n, m = _need(params, "n", "m")
        return WarmModel(build_fixed_m(int(n), int(m)), float(alpha), f"fixed_m({n},{m})")
    n, p = _need(params, "n", "p")
    return WarmModel(build_bernoulli(int(n), float(p)), float(alpha), f"bernoulli({n},{p})")


def model_from_dict(data: dict[str, Any], alpha: float | None = None) -> WarmModel:
    """Build a model from either JSON shape; ``alpha`` overrides the stored exponent."""
    if not isinstance(data, dict):
        raise ModelError("model document must be a JSON object")
    a = alpha if alpha is not None else data.get("alpha")
    if a is None:
        raise ModelError("missing 'alpha'")
    if "family" in data:
        return build_family(str(data["family"]), dict(data.get("params", {})), float(a))
    if "subsets" not in data or "n" not in data:
        raise ModelError("explicit model needs 'n' and 'subsets' (or use 'family')")
    entries = []
    for item in data["subsets"]:
        if "colours" not in item or "p" not in item:
            raise ModelError("each subset entry needs 'colours' and 'p'")
        entries.append((item["colours"], item["p"]))
    dist = SubsetDistribution.from_entries(int(data["n"]), entries)
    return WarmModel(dist, float(a), str(data.get("label", "")))


def load_model(path: str | Path, alpha: float | None = None) -> WarmModel:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"not valid JSON: {exc}") from exc
    return model_from_dict(data, alpha)


def model_to_dict(model: WarmModel) -> dict[str, Any]:
    return {
        "n": model.n,
        "alpha": model.alpha,
        "subsets": [{"colours": list(c), "p": p} for c, p in model.dist.subsets()],
    }
