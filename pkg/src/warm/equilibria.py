"""Enumeration and linear-stability classification of equilibria.

Every nonempty support ``S`` is searched separately: the colours outside
``S`` are fixed at zero and the interior equilibria of the restricted model are
found by damped Newton iteration in log coordinates, where the boundary
``v_i = 0`` is not a root.  Classification always uses the full ``n x n``
Jacobian.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .dynamics import DegenerateFaceError, drift, jacobian, powers
from .families import (  # noqa: F401  closed-form family solvers live alongside the general one
    star_equilibria,
    star_structured_eigen,
    triangle_equilibria,
    triangle_structured_eigen,
    whisker_structured_eigen,
    whisker_symmetric_equilibria,
)
from .model import MAX_ENUMERATED, WarmModel, colours_of

EPS_EIG = 1e-8
DEDUP_RADIUS = 1e-7
RESIDUAL_TOL = 1e-10
POLISH_TOL = 1e-12
MERGE_RADIUS = 1e-3

STABLE, UNSTABLE, CRITICAL = "stable", "unstable", "critical"


class NotEquilibriumError(ValueError):
    pass


def classify_spectrum(eigenvalues, eps: float = EPS_EIG) -> str:
    top = float(np.max(np.real(eigenvalues)))
    if top < -eps:
        return STABLE
    if top > eps:
        return UNSTABLE
    return CRITICAL


@dataclass
class Equilibrium:
    point: np.ndarray
    support: tuple[int, ...]
    eigenvalues: np.ndarray
    classification: str
    residual: float

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def stable(self) -> bool:
        return self.classification == STABLE

    def to_dict(self) -> dict:
        return {
            "v": [float(x) for x in self.point],
            "support": list(self.support),
            "eigenvalues_re": [float(z.real) for z in self.eigenvalues],
            "eigenvalues_im": [float(z.imag) for z in self.eigenvalues],
            "class": self.classification,
            "residual": float(self.residual),
        }


def model_hash(model: WarmModel) -> str:
    blob = json.dumps([model.n, model.alpha, model.dist.canonical()])
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class EquilibriumCatalog:
    model_hash: str
    alpha: float
    equilibria: list[Equilibrium]
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.equilibria)

    def __iter__(self):
        return iter(self.equilibria)

    def points(self) -> np.ndarray:
        return np.array([e.point for e in self.equilibria])

    def by_class(self, cls: str) -> list[Equilibrium]:
        return [e for e in self.equilibria if e.classification == cls]

    def nearest(self, x, sort_coordinates: bool = False) -> tuple[int, float]:
        """Index of and sup-norm distance to the closest catalogued point."""
        P = self.points()
        x = np.asarray(x, dtype=float)
        if sort_coordinates:
            P = -np.sort(-P, axis=1)
            x = -np.sort(-x)
        d = np.max(np.abs(P - x[None, :]), axis=1)
        i = int(np.argmin(d))
        return i, float(d[i])

    def find(self, x, tol: float = 1e-6) -> Equilibrium | None:
        i, d = self.nearest(x)
        return self.equilibria[i] if d <= tol else None

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "alpha": self.alpha,
            "model_hash": self.model_hash,
            "equilibria": [e.to_dict() for e in self.equilibria],
            "meta": self.meta,
        }


def support_lower_bound(model: WarmModel) -> np.ndarray:
    """Per-colour floor on any nonzero equilibrium component.

    ``v_i >= (sum_{A containing i} (p_A / |A|)**(1 - alpha))**(1 / (1 - alpha))``.
    """
    a = model.alpha
    M = model.dist.incidence
    q = (model.dist.prob_array / model.dist.sizes) ** (1.0 - a)
    return (M.T @ q) ** (1.0 / (1.0 - a))


def classify(model: WarmModel, point, residual_tol: float = 1e-8, eps: float = EPS_EIG) -> Equilibrium:
    x = np.asarray(point, dtype=float)
    try:
        F = drift(model, x)
    except DegenerateFaceError as exc:
        raise NotEquilibriumError(str(exc)) from exc
    res = float(np.max(np.abs(F)))
    if not res < residual_tol:
        raise NotEquilibriumError(f"residual {res:.3e} exceeds {residual_tol:.1e}")
    ev = np.linalg.eigvals(jacobian(model, x))
    ev = ev[np.lexsort((ev.imag, -ev.real))]
    support = tuple(int(i) for i in np.flatnonzero(x > 0))
    return Equilibrium(x, support, ev, classify_spectrum(ev, eps), res)


def max_real_eigenvalue(model: WarmModel, point) -> float:
    return float(np.max(np.linalg.eigvals(jacobian(model, point)).real))


def det_rank_one_update(R, y, w) -> float:
    """``det(R + y w^T)`` for diagonal ``R`` via ``det(R) + w^T adj(R) y``; fine for singular ``R``."""
    r = np.diag(R) if np.ndim(R) == 2 else np.asarray(R, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n = r.size
    # products over j != i without dividing by r_i
    left = np.concatenate(([1.0], np.cumprod(r[:-1]))) if n else np.ones(0)
    right = np.concatenate((np.cumprod(r[::-1][:-1])[::-1], [1.0])) if n else np.ones(0)
    return float(np.prod(r) + np.sum(w * y * left * right))


# --- per-face Newton search ---------------------------------------------------


class _Face:
    """Restriction of a model to the colours in ``support``."""

    def __init__(self, model: WarmModel, support: Sequence[int]):
        self.support = tuple(support)
        self.alpha = model.alpha
        M = model.dist.incidence[:, list(self.support)]
        self.valid = bool(np.all(M.sum(axis=1) > 0))
        self.M = M
        self.p = model.dist.prob_array

    def residual_log(self, y: np.ndarray) -> np.ndarray:
        x = np.exp(y)
        S = self.M @ powers(x, self.alpha)
        return -1.0 + np.exp((self.alpha - 1.0) * y) * (self.M.T @ (self.p / S))

    def jac_log(self, y: np.ndarray, G: np.ndarray) -> np.ndarray:
        a = self.alpha
        x = np.exp(y)
        xa = np.exp(a * y)
        S = self.M @ xa
        pair = self.M.T @ ((self.p / S**2)[:, None] * self.M)
        J = -a * np.exp((a - 1.0) * y)[:, None] * xa[None, :] * pair
        J[np.diag_indices_from(J)] += (a - 1.0) * (G + 1.0)
        return J

    def newton(self, x0: np.ndarray, max_iter: int = 100) -> np.ndarray | None:
        # far from a root, x**alpha can underflow; such steps are rejected below
        with np.errstate(all="ignore"):
            return self._newton(x0, max_iter)

    def _newton(self, x0: np.ndarray, max_iter: int) -> np.ndarray | None:
        y = np.log(x0)
        G = self.residual_log(y)
        phi = 0.5 * float(G @ G)
        if not np.isfinite(phi):
            return None
        for _ in range(max_iter):
            if np.max(np.abs(G)) < 1e-14:
                break
            J = self.jac_log(y, G)
            if not np.all(np.isfinite(J)):
                return None
            try:
                d = np.linalg.solve(J, -G)
            except np.linalg.LinAlgError:
                d = np.linalg.lstsq(J, -G, rcond=None)[0]
            if not np.all(np.isfinite(d)):
                return None
            big = np.max(np.abs(d))
            if big > 2.0:
                d *= 2.0 / big
            lam = 1.0
            while True:
                y_new = y + lam * d
                G_new = self.residual_log(y_new)
                phi_new = 0.5 * float(G_new @ G_new)
                if np.isfinite(phi_new) and phi_new <= (1.0 - 1e-4 * lam) * phi:
                    break
                lam *= 0.5
                if lam < 1e-10:
                    break
            if lam < 1e-10:
                # stalled: either at the rounding floor of a root or stuck
                break
            y, G, phi = y_new, G_new, phi_new
            if phi == 0.0 or np.max(np.abs(lam * d)) < 1e-15:
                break
        x = np.exp(y)
        if not np.all(np.isfinite(x)):
            return None
        return x / x.sum()


def _face_starts(k: int, n_starts: int) -> np.ndarray:
    bary = np.full((1, k), 1.0 / k)
    if k == 1 or n_starts <= 1:
        return bary
    u = qmc.Halton(d=k, scramble=True, seed=12345).random(n_starts - 1)
    e = -np.log(np.clip(u, 1e-12, 1.0))
    return np.vstack([bary, e / e.sum(axis=1, keepdims=True)])


def _same_root(model: WarmModel, x: np.ndarray, z: np.ndarray, dedup: float) -> bool:
    d = np.max(np.abs(x - z))
    if d <= dedup:
        return True
    # degenerate roots are only resolved to about the cube root of rounding
    # error; treat two nearby points as one if the field vanishes between them
    if d > MERGE_RADIUS:
        return False
    mid = 0.5 * (x + z)
    return float(np.max(np.abs(drift(model, mid)))) < RESIDUAL_TOL


def _insert(model, local: list, x: np.ndarray, res: float, dedup: float) -> None:
    for i, (z, rz) in enumerate(local):
        if _same_root(model, x, z, dedup):
            if res < rz:
                local[i] = (x, res)
            return
    local.append((x, res))


def _supports(n: int, full_only: bool):
    if full_only:
        yield tuple(range(n))
        return
    for size in range(1, n + 1):
        yield from combinations(range(n), size)


def find_equilibria(
    model: WarmModel,
    n_starts: int = 50,
    *,
    eps: float = EPS_EIG,
    dedup: float = DEDUP_RADIUS,
    full_simplex_only: bool | None = None,
) -> EquilibriumCatalog:
    """All equilibria reachable by multi-start Newton on every face of the simplex.

    Faces where some positive-probability subset would be entirely zero carry
    no equilibria (the field is 0/0 there) and are skipped but counted.
    """
    n = model.n
    if full_simplex_only is None:
        full_simplex_only = n > MAX_ENUMERATED
    found: list[np.ndarray] = []
    meta = {
        "faces_explored": 0,
        "faces_invalid": 0,
        "newton_failures": 0,
        "rejected_residual": 0,
        "starts_per_face": n_starts,
        "full_simplex_only": bool(full_simplex_only),
    }
    for support in _supports(n, full_simplex_only):
        face = _Face(model, support)
        if not face.valid:
            meta["faces_invalid"] += 1
            continue
        meta["faces_explored"] += 1
        local: list[tuple[np.ndarray, float]] = []
        for x0 in _face_starts(len(support), n_starts):
            xs = face.newton(x0)
            if xs is None:
                meta["newton_failures"] += 1
                continue
            x = np.zeros(n)
            x[list(support)] = xs
            res = float(np.max(np.abs(drift(model, x))))
            if res >= RESIDUAL_TOL:
                meta["newton_failures"] += 1
                meta["rejected_residual"] += 1
                continue
            _insert(model, local, x, res, dedup)
        found.extend(x for x, _ in local)
    eqs = [classify(model, x, residual_tol=RESIDUAL_TOL, eps=eps) for x in found]
    eqs.sort(key=lambda e: (len(e.support), tuple(np.round(-e.point, 9))))
    return EquilibriumCatalog(model_hash(model), model.alpha, eqs, meta)


def equilibrium_support_label(e: Equilibrium) -> str:
    return "{" + ",".join(str(i) for i in e.support) + "}"


__all__ = [
    "CRITICAL",
    "STABLE",
    "UNSTABLE",
    "Equilibrium",
    "EquilibriumCatalog",
    "NotEquilibriumError",
    "classify",
    "classify_spectrum",
    "det_rank_one_update",
    "find_equilibria",
    "max_real_eigenvalue",
    "model_hash",
    "support_lower_bound",
    "colours_of",
    "star_equilibria",
    "star_structured_eigen",
    "triangle_equilibria",
    "triangle_structured_eigen",
    "whisker_structured_eigen",
    "whisker_symmetric_equilibria",
]
