"""Scalar-equation solvers and closed-form spectra for the star, triangle and symmetric whisker.

Each family reduces its equilibrium system to one scalar equation in
``t = log(ratio of the two distinct components)``.  Roots close to the
singular right end of the interval are found in the variable
``l = log(gap)`` so that large exponents do not lose them to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import brentq

from .dynamics import drift, jacobian
from .model import build_cycle, build_star, build_whisker, graph_to_warm

XTOL = 1e-14
STRUCT_TOL = 1e-10


class NotFamilyEquilibriumError(ValueError):
    pass


def _check_equilibrium(model, point, tol: float = STRUCT_TOL) -> None:
    res = float(np.max(np.abs(drift(model, point))))
    if not res < tol:
        raise NotFamilyEquilibriumError(f"point is not an equilibrium (residual {res:.3e})")


def expand_spectrum(pairs) -> np.ndarray:
    """Flatten ``[(value, multiplicity), ...]`` into a sorted eigenvalue array."""
    vals = [lam for lam, m in pairs for _ in range(m)]
    return np.sort(np.array(vals, dtype=float))


def _root_near_gap_end(phi_of_gap, l_start: float) -> float:
    """Root of ``phi`` over ``l = log(gap) < l_start`` where ``phi -> +inf`` as ``l -> -inf``.

    Assumes ``phi(l_start) < 0`` and a single sign change below it.
    """
    lo = l_start - 1.0
    while phi_of_gap(lo) <= 0.0:
        lo = l_start - 2.0 * (l_start - lo)
        if lo < -745.0:  # gap below the smallest double
            return lo
    return brentq(phi_of_gap, lo, l_start, xtol=XTOL, rtol=4 * np.finfo(float).eps)


# --- star graph ---------------------------------------------------------------


@dataclass(frozen=True)
class StarEquilibrium:
    """``k`` leaves at ``v`` and ``n - k`` leaves at ``u`` with ``v = e^t u``."""

    n: int
    k: int
    v: float
    u: float
    t: float
    branch: str  # "increasing" or "decreasing" in alpha

    @property
    def point(self) -> np.ndarray:
        return np.array([self.v] * self.k + [self.u] * (self.n - self.k))


def _star_constants(n: int, k: int) -> tuple[float, float, float]:
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got n={n}, k={k}")
    a = (n - k) / (n - k + 1)
    b = (1 + k) / k
    c = (n + 1 - k) / k
    return a, b, c


def f_kn(t, n: int, k: int):
    """``f_{k,n}(t) = log((n+1-k)/k * (e^t - a)/(b - e^t))``."""
    a, b, c = _star_constants(n, k)
    x = np.exp(t)
    return np.log(c * (x - a) / (b - x))


def f_kn_prime(t, n: int, k: int):
    a, b, _ = _star_constants(n, k)
    x = np.exp(t)
    return a / (x - a) + b / (b - x)


def star_inflection(n: int, k: int) -> float:
    """``t`` where ``f'_{k,n}`` is smallest (``f`` changes from concave to convex)."""
    a, b, _ = _star_constants(n, k)
    return 0.5 * math.log(a * b)


def _star_slope_points(a: float, b: float, alpha: float) -> list[float]:
    """Values ``x = e^t`` in ``(a, b)`` where ``f'(t) = alpha``; ``f'`` is a ratio of quadratics in ``x``."""
    # a (b - x) + b (x - a) = alpha (x - a)(b - x)
    B = alpha * (a + b) - (b - a)
    disc = B * B - 4.0 * alpha * alpha * a * b
    if disc <= 0.0:
        return []
    r = math.sqrt(disc)
    return sorted(x for x in ((B - r) / (2 * alpha), (B + r) / (2 * alpha)) if a < x < b)


def _star_point(n: int, k: int, x: float) -> tuple[float, float]:
    u = 1.0 / (n + k * (x - 1.0))
    return x * u, u


def star_equilibria(n: int, k: int, alpha: float) -> list[StarEquilibrium]:
    """Non-uniform star equilibria with ``k`` large leaves: roots ``t > 0`` of ``alpha t = f_{k,n}(t)``.

    ``phi(t) = f(t) - alpha t`` vanishes at ``t = 0`` and blows up at
    ``log b``; it is monotone between the (at most two) points where
    ``f' = alpha``, so each monotone piece holds at most one root.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    a, b, c = _star_constants(n, k)
    lc = math.log(c)

    def phi_gap(l):
        # x = b - e^l
        x = b - math.exp(l)
        return lc + math.log(x - a) - l - alpha * math.log(x)

    turns = [x for x in _star_slope_points(a, b, alpha) if x > 1.0]
    knots = [1.0] + turns + [b]
    out = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        if lo == 1.0:
            continue  # phi is strictly monotone away from its root at t = 0
        l_lo = math.log(b - lo)
        if hi == b:
            if phi_gap(l_lo) >= 0.0:
                continue
            l = _root_near_gap_end(phi_gap, l_lo)
        else:
            l_hi = math.log(b - hi)
            if phi_gap(l_lo) * phi_gap(l_hi) > 0.0:
                continue
            l = brentq(phi_gap, l_hi, l_lo, xtol=XTOL, rtol=4 * np.finfo(float).eps)
        x = b - math.exp(l)
        t = math.log(x)
        slope = a / (x - a) + b / math.exp(l) - alpha
        v, u = _star_point(n, k, x)
        out.append(StarEquilibrium(n, k, v, u, t, "increasing" if slope > 0 else "decreasing"))
    # the first interior knot is a minimum of phi when it exists, so roots
    # are found left to right in t; report in increasing t
    return sorted(out, key=lambda e: e.t)


def star_structured_eigen(n: int, k: int, v: float, u: float, alpha: float, check: bool = True):
    """Closed-form spectrum at the star point ``((v)_k, (u)_{n-k})`` as ``[(value, multiplicity)]``."""
    if check:
        model = graph_to_warm(build_star(n), alpha)
        _check_equilibrium(model, np.array([v] * k + [u] * (n - k)))
    eta = k * v**alpha + (n - k) * u**alpha
    xi = alpha / ((n + 1) * eta**2)
    pairs = [(-1.0, 1), (-1.0 + xi * (u * v) ** (alpha - 1), 1)]
    if k >= 2:
        pairs.append((-1.0 + xi * eta * v ** (alpha - 1), k - 1))
    if n - k >= 2:
        pairs.append((-1.0 + xi * eta * u ** (alpha - 1), n - k - 1))
    return pairs


def star_tangency(n: int, k: int) -> tuple[float, float]:
    """``(alpha_tilde, t)`` where the line ``alpha t`` touches ``f_{k,n}``; needs ``k < n/2``.

    Eliminating ``alpha`` leaves ``tau(t) = t f'(t) - f(t) = 0`` on
    ``(t_inflection, log b)``; ``tau <= 0`` at the inflection point and
    ``tau -> +inf`` at the right end.
    """
    if not (1 <= k and 2 * k < n):
        raise ValueError(f"tangency needs 1 <= k < n/2, got n={n}, k={k}")
    _, b, _ = _star_constants(n, k)

    def tau(t):
        return t * float(f_kn_prime(t, n, k)) - float(f_kn(t, n, k))

    lo = star_inflection(n, k)
    gap = 0.5 * (b - math.exp(lo))
    while tau(math.log(b - gap)) <= 0.0:
        gap *= 0.1
    t = brentq(tau, lo, math.log(b - gap), xtol=XTOL)
    return float(f_kn_prime(t, n, k)), t


# --- triangle -------------------------------------------------------------------


@dataclass(frozen=True)
class TriangleBranch:
    label: str  # "i" .. "v"
    points: tuple[tuple[float, float, float], ...]
    stable: bool
    v: float
    u: float
    t: float | None = None


def _triangle_root(alpha: float) -> float | None:
    """Nonzero root of ``log(3 / (4 - e^t)) = (alpha - 1) t``, or ``None`` at ``alpha = 4/3``."""
    def psi(t):
        return math.log(3.0 / (4.0 - math.exp(t))) - (alpha - 1.0) * t

    t_min = math.log(4.0 * (alpha - 1.0) / alpha)
    if abs(t_min) < 1e-15 or psi(t_min) >= 0.0:
        return None
    if t_min > 0:
        def psi_gap(l):  # e^t = 4 - e^l
            return math.log(3.0) - l - (alpha - 1.0) * math.log(4.0 - math.exp(l))

        l = _root_near_gap_end(psi_gap, math.log(4.0 - math.exp(t_min)))
        return math.log(4.0 - math.exp(l))
    lo = t_min - 1.0
    while psi(lo) <= 0.0:
        lo = t_min - 2.0 * (t_min - lo)
    return brentq(psi, lo, t_min, xtol=XTOL)


def _perms(p) -> tuple[tuple[float, ...], ...]:
    return tuple(sorted(set(permutations(p)), reverse=True))


def triangle_equilibria(alpha: float) -> list[TriangleBranch]:
    """Every triangle equilibrium, grouped by branch with its stability."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    third = 1.0 / 3.0
    out = [
        TriangleBranch("i", ((third, third, third),), alpha < 4.0 / 3.0, third, third),
        TriangleBranch("ii", _perms((0.5, 0.5, 0.0)), alpha < 3.0, 0.5, 0.5),
    ]
    if alpha > 3.0:
        (e,) = [s for s in star_equilibria(2, 1, alpha) if s.branch == "increasing"]
        out.append(TriangleBranch("iii", _perms((e.v, e.u, 0.0)), True, e.v, e.u, e.t))
    t = _triangle_root(alpha)
    if t is not None:
        x = math.exp(t)
        if t < 0:
            v = 1.0 / (2.0 + x)
            u = x * v
            out.append(TriangleBranch("iv", _perms((v, v, u)), False, v, u, t))
        else:
            u = 1.0 / (2.0 + x)
            v = x * u
            out.append(TriangleBranch("v", _perms((v, u, u)), False, v, u, t))
    return out


def triangle_structured_eigen(v: float, u: float, alpha: float, check: bool = True) -> tuple[float, float, float]:
    """Spectrum at a permutation of ``(v, u, u)``; ``v`` is the component that differs."""
    if check:
        _check_equilibrium(graph_to_warm(build_cycle(3), alpha), np.array([v, u, u]))
    eta = alpha * (u * v) ** alpha / (3.0 * (u**alpha + v**alpha) ** 2)
    return -1.0, -1.0 + eta / (u * v), -1.0 + (alpha + 6.0 * eta) / (6.0 * u)


# --- symmetric whisker --------------------------------------------------------


@dataclass(frozen=True)
class WhiskerEquilibrium:
    """Point ``((v)_r, u, (v)_r)`` of ``whisker(r, r)``: leaf edges at ``v``, hub edge at ``u = e^t v``."""

    r: int
    v: float
    u: float
    t: float
    stable: bool

    @property
    def point(self) -> np.ndarray:
        return np.array([self.v] * self.r + [self.u] + [self.v] * self.r)


def whisker_symmetric_equilibria(r: int, alpha: float) -> list[WhiskerEquilibrium]:
    """Roots ``t`` in ``(0, log 2)`` of ``(alpha - 1) t = log((r + 1) / (2 - e^t))``; larger root stable.

    ``psi(t) = log((r+1)/(2-e^t)) - (alpha-1) t`` is convex with
    ``psi(0) > 0`` and a minimum at ``e^t = 2(alpha-1)/alpha``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if alpha <= 2.0:
        return []
    lr = math.log(r + 1.0)

    def psi(t):
        return lr - math.log(2.0 - math.exp(t)) - (alpha - 1.0) * t

    def psi_gap(l):  # e^t = 2 - e^l
        return lr - l - (alpha - 1.0) * math.log(2.0 - math.exp(l))

    t_min = math.log(2.0 * (alpha - 1.0) / alpha)
    if psi(t_min) >= 0.0:
        return []
    t_lo = brentq(psi, 0.0, t_min, xtol=XTOL)
    l_hi = _root_near_gap_end(psi_gap, math.log(2.0 - math.exp(t_min)))
    t_hi = math.log(2.0 - math.exp(l_hi))
    out = []
    for t, stable in ((t_lo, False), (t_hi, True)):
        x = math.exp(t)
        v = 1.0 / (2 * r + x)
        out.append(WhiskerEquilibrium(r, v, x * v, t, stable))
    return out


def whisker_structured_eigen(r: int, v: float, u_hub: float, alpha: float, check: bool = True):
    """Closed-form spectrum of ``whisker(r, r)`` at ``((v)_r, u_hub, (v)_r)`` as ``[(value, multiplicity)]``.

    With ``u_hub = 0`` the graph splits into two stars of ``r`` leaves, each at
    its uniform point, plus the ``-1`` of the zeroed hub edge.
    """
    if check:
        model = graph_to_warm(build_whisker(r, r), alpha)
        _check_equilibrium(model, np.array([v] * r + [u_hub] + [v] * r))
    if u_hub == 0.0:
        pairs = [(-1.0, 3)]
        if r >= 2:
            pairs.append((alpha / (r + 1.0) - 1.0, 2 * (r - 1)))
        return pairs
    delta = r * v**alpha + u_hub**alpha
    xi = alpha / ((2 * r + 2) * delta**2)
    pairs = [
        (-1.0, 1),
        (xi * (u_hub * v) ** (alpha - 1) - 1.0, 1),
        (xi * v ** (alpha - 1) * u_hub**alpha - 1.0, 1),
    ]
    if r >= 2:
        pairs.append((delta * xi * v ** (alpha - 1) - 1.0, 2 * (r - 1)))
    return pairs


def dense_spectrum(model, point) -> np.ndarray:
    """Sorted real parts of the dense Jacobian spectrum, for comparison with the closed forms."""
    return np.sort(np.linalg.eigvals(jacobian(model, point)).real)
