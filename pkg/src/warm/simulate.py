"""Exact Monte-Carlo simulation of the urn and comparison of endpoints with an equilibrium catalog.

Every run starts with one ball per colour.  Each step draws two uniforms from
the run's own ``numpy.random.Generator(Philox(seed))``: the first picks the
competing subset through an alias table, the second picks the colour inside
it with weights ``(N_i / N_max) ** alpha``.  Batches advance all runs
together but consume each stream exactly as repeated calls to :func:`step`
would, so results do not depend on batching or worker count.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .equilibria import EquilibriumCatalog
from .model import WarmModel, colours_of

ASSIGN_RADIUS = 0.1
CHUNK = 4096
UNRESOLVED = "unresolved"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def default_seed(fallback: int = 0) -> int:
    return int(os.environ.get("WARM_SEED", fallback))


@dataclass(frozen=True)
class _Sampler:
    prob: np.ndarray  # alias acceptance thresholds
    alias: np.ndarray
    members: np.ndarray  # (subsets, max size), padded with 0
    valid: np.ndarray  # same shape, True for real members


def _alias_table(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose's alias method."""
    k = p.size
    scaled = p * k
    prob = np.ones(k)
    alias = np.arange(k)
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] + scaled[s] - 1.0
        (small if scaled[g] < 1.0 else large).append(g)
    return prob, alias


@lru_cache(maxsize=64)
def _sampler(dist) -> _Sampler:
    prob, alias = _alias_table(dist.prob_array)
    sets = [colours_of(m) for m in dist.masks]
    width = max(len(s) for s in sets)
    members = np.zeros((len(sets), width), dtype=np.int64)
    valid = np.zeros((len(sets), width), dtype=bool)
    for i, s in enumerate(sets):
        members[i, : len(s)] = s
        valid[i, : len(s)] = True
    return _Sampler(prob, alias, members, valid)


def _advance(sampler: _Sampler, counts: np.ndarray, u: np.ndarray, alpha: float) -> np.ndarray:
    """One step for every row of ``counts`` (modified in place); ``u`` has shape ``(rows, 2)``.  Returns chosen colours."""
    k = sampler.prob.size
    scaled = u[:, 0] * k
    col = np.minimum(scaled.astype(np.int64), k - 1)
    subset = np.where(scaled - col < sampler.prob[col], col, sampler.alias[col])
    members = sampler.members[subset]
    valid = sampler.valid[subset]
    rows = np.arange(counts.shape[0])[:, None]
    c = np.where(valid, counts[rows, members], 0).astype(float)
    w = (c / c.max(axis=1, keepdims=True)) ** alpha
    cum = np.cumsum(w, axis=1)
    pick = np.argmax(cum > (u[:, 1] * cum[:, -1])[:, None], axis=1)
    chosen = members[np.arange(counts.shape[0]), pick]
    counts[np.arange(counts.shape[0]), chosen] += 1
    return chosen


@dataclass
class UrnState:
    counts: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, n: int) -> "UrnState":
        return cls(np.ones(n, dtype=np.int64), 0)

    @property
    def proportions(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def step(model: WarmModel, state: UrnState, rng: np.random.Generator) -> UrnState:
    """Add one ball: draw the competing subset, then one of its colours."""
    counts = state.counts.copy()[None, :]
    _advance(_sampler(model.dist), counts, rng.random((1, 2)), model.alpha)
    return UrnState(counts[0], state.t + 1)


# --- exact one-step law ---------------------------------------------------------


def conditional_law(model: WarmModel, counts) -> np.ndarray:
    """Probability that each colour receives the next ball, by summing over subsets."""
    counts = [float(c) for c in counts]
    out = np.zeros(model.n)
    for cols, p in model.dist.subsets():
        w = [counts[i] ** model.alpha for i in cols]
        total = sum(w)
        for i, wi in zip(cols, w):
            out[i] += p * wi / total
    return out


def expected_increment(model: WarmModel, counts) -> np.ndarray:
    """``E[X_{t+1} - X_t]`` given the counts, by enumerating every (subset, colour) outcome."""
    counts = np.asarray(counts, dtype=float)
    T = counts.sum()
    x = counts / T
    law = conditional_law(model, counts)
    out = np.zeros(model.n)
    for i in range(model.n):
        if law[i] == 0.0:
            continue
        nxt = counts.copy()
        nxt[i] += 1.0
        out += law[i] * (nxt / (T + 1.0) - x)
    return out


def reachable_states(model: WarmModel, t: int) -> list[tuple[int, ...]]:
    """Count vectors reachable with positive probability after ``t`` steps from one ball per colour."""
    frontier = {tuple([1] * model.n)}
    for _ in range(t):
        nxt = set()
        for s in frontier:
            law = conditional_law(model, s)
            for i in np.flatnonzero(law > 0):
                c = list(s)
                c[i] += 1
                nxt.add(tuple(c))
        frontier = nxt
    return sorted(frontier)


# --- runs and batches -------------------------------------------------------------


@dataclass
class RunSummary:
    seed: int
    steps: int
    counts: np.ndarray
    trace_t: np.ndarray | None = None
    trace: np.ndarray | None = None
    assigned: int | str | None = None
    distance: float | None = None

    @property
    def final(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def _simulate(model: WarmModel, steps: int, seeds: list[int], record_stride: int = 0):
    """Advance ``len(seeds)`` independent runs; returns final counts and optional traces."""
    sampler = _sampler(model.dist)
    n = model.n
    R = len(seeds)
    counts = np.ones((R, n), dtype=np.int64)
    rngs = [make_rng(s) for s in seeds]
    trace_t, trace = [], []
    if record_stride:
        trace_t.append(0)
        trace.append(counts / counts.sum(axis=1, keepdims=True))
    done = 0
    while done < steps:
        m = min(CHUNK, steps - done)
        U = np.stack([r.random((m, 2)) for r in rngs], axis=1)  # (m, R, 2)
        for j in range(m):
            _advance(sampler, counts, U[j], model.alpha)
            t = done + j + 1
            if record_stride and t % record_stride == 0:
                trace_t.append(t)
                trace.append(counts / counts.sum(axis=1, keepdims=True))
        done += m
    if record_stride:
        return counts, np.array(trace_t), np.stack(trace, axis=1)  # (R, records, n)
    return counts, None, None


def run(model: WarmModel, steps: int, seed: int, record_stride: int = 0, catalog: EquilibriumCatalog | None = None) -> RunSummary:
    """One run of ``steps`` balls, deterministic in ``seed``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    counts, tt, tr = _simulate(model, steps, [seed], record_stride)
    out = RunSummary(int(seed), steps, counts[0], tt, None if tr is None else tr[0])
    if catalog is not None:
        _assign(out, catalog, ASSIGN_RADIUS, False)
    return out


def _assign(r: RunSummary, catalog: EquilibriumCatalog, radius: float, sort_coordinates: bool) -> None:
    i, d = catalog.nearest(r.final, sort_coordinates)
    r.distance = d
    r.assigned = i if d <= radius else UNRESOLVED


@dataclass
class BatchResult:
    runs: list[RunSummary]
    catalog: EquilibriumCatalog
    histogram: dict = field(default_factory=dict)
    radius: float = ASSIGN_RADIUS

    @property
    def resolved_fraction(self) -> float:
        return 1.0 - self.histogram.get(UNRESOLVED, 0) / len(self.runs)

    def fraction(self, indices) -> float:
        idx = set(indices)
        return sum(1 for r in self.runs if r.assigned in idx) / len(self.runs)

    def summary(self) -> dict:
        d = np.array([r.distance for r in self.runs])
        return {
            "runs": len(self.runs),
            "resolved_fraction": self.resolved_fraction,
            "histogram": {str(k): v for k, v in self.histogram.items()},
            "distance_mean": float(d.mean()),
            "distance_max": float(d.max()),
        }

    def write_csv(self, prefix: str | Path) -> list[Path]:
        prefix = str(prefix)
        n = self.catalog.points().shape[1]
        paths = [Path(prefix + "_runs.csv")]
        with open(paths[0], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["run", "seed"] + [f"x_{i}" for i in range(n)] + ["assigned", "distance"])
            for k, r in enumerate(self.runs):
                w.writerow([k, r.seed] + [repr(float(c)) for c in r.final] + [r.assigned, repr(r.distance)])
        for k, r in enumerate(self.runs):
            if r.trace is None:
                continue
            p = Path(f"{prefix}_trace_{k}.csv")
            with open(p, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["t"] + [f"x_{i}" for i in range(n)])
                for t, x in zip(r.trace_t, r.trace):
                    w.writerow([int(t)] + [repr(float(c)) for c in x])
            paths.append(p)
        return paths


def _batch_part(args):
    model, steps, seeds, record_stride = args
    return _simulate(model, steps, seeds, record_stride)


def batch(
    model: WarmModel,
    runs: int,
    steps: int,
    base_seed: int,
    catalog: EquilibriumCatalog,
    *,
    record_stride: int = 0,
    radius: float = ASSIGN_RADIUS,
    sort_coordinates: bool = False,
    jobs: int = 1,
) -> BatchResult:
    """``runs`` runs with seeds ``base_seed + i``, each assigned to the nearest catalogued equilibrium.

    A run further than ``radius`` (sup norm) from every catalogued point goes
    to the ``"unresolved"`` bucket.
    """
    if len(catalog) == 0:
        raise ValueError("catalog is empty")
    if runs < 1 or steps < 1:
        raise ValueError("runs and steps must be >= 1")
    seeds = [base_seed + i for i in range(runs)]
    jobs = max(1, min(jobs, runs))
    groups = [seeds[i::jobs] for i in range(jobs)]
    if jobs == 1:
        parts = [_simulate(model, steps, seeds, record_stride)]
    else:
        with ProcessPoolExecutor(jobs) as ex:
            parts = list(ex.map(_batch_part, [(model, steps, g, record_stride) for g in groups]))
    by_seed = {}
    for g, (counts, tt, tr) in zip(groups, parts):
        for j, s in enumerate(g):
            by_seed[s] = RunSummary(s, steps, counts[j], tt, None if tr is None else tr[j])
    out = [by_seed[s] for s in seeds]
    hist: dict = {}
    for r in out:
        _assign(r, catalog, radius, sort_coordinates)
        hist[r.assigned] = hist.get(r.assigned, 0) + 1
    return BatchResult(out, catalog, hist, radius)
