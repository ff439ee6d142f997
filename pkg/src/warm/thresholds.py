"""Critical exponents: closed forms for the uniform point and the named families, plus a numeric cross-check.

A threshold ``alpha_star`` means the equilibrium in question is linearly
stable for ``1 < alpha < alpha_star`` and unstable above it.  Families whose
uniform point is unstable for every ``alpha > 1`` report ``alpha_star = 1``
with the ``never_stable`` flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .equilibria import max_real_eigenvalue
from .families import star_tangency
from .model import ModelError, WarmModel, check_symmetry

BISECT_TOL = 1e-10
NEVER_STABLE = "never_stable"
PRECONDITION = "precondition_violated"


@dataclass(frozen=True)
class ThresholdResult:
    alpha_star: float
    family: str
    method: str  # "closed_form" or "bisection"
    params: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    @property
    def never_stable(self) -> bool:
        return NEVER_STABLE in self.flags

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "family": self.family,
            "params": self.params,
            "alpha_star": None if self.never_stable else self.alpha_star,
            "method": self.method,
            "flags": list(self.flags),
        }


def _comb(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


def uniform_threshold_from_sizes(n: int, p_m: dict[int, float | Fraction]):
    """``1 / (n^2 sum_{m>=2} p_m C(n-2, m-2) / m^2)``; exact when the ``p_m`` are Fractions."""
    denom = sum(p * _comb(n - 2, m - 2) / (m * m) for m, p in p_m.items() if m >= 2)
    denom = denom * n * n
    if denom == 0:
        return math.inf
    return 1 / denom


def uniform_threshold(model_or_dist, family: str = "model") -> ThresholdResult:
    """Stability threshold of ``1/n`` for a strongly symmetric law."""
    dist = getattr(model_or_dist, "dist", model_or_dist)
    rep = check_symmetry(dist)
    if not rep.strong:
        raise ModelError("uniform threshold needs every subset of a given size to be equally likely")
    flags = ()
    if rep.p_m.get(dist.n, 0.0) >= 1.0 - 1e-12:
        flags = (PRECONDITION,)
    a = float(uniform_threshold_from_sizes(dist.n, rep.p_m))
    return ThresholdResult(a, family, "closed_form", {"n": dist.n}, flags)


def fixed_m_threshold(n: int, m: int) -> ThresholdResult:
    """``m (n - 1) / (n (m - 1))``; for ``m = 1`` every colour is isolated and there is no threshold."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    flags = (PRECONDITION,) if m == n else ()
    a = math.inf if m == 1 else m * (n - 1) / (n * (m - 1))
    return ThresholdResult(a, "fixed_m", "closed_form", {"n": n, "m": m}, flags)


def bernoulli_threshold(n: int, p: float) -> ThresholdResult:
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    top = 1.0 - (1.0 - p) ** n
    denom = sum(
        p**m * (1.0 - p) ** (n - m) * n * n / (m * m) * _comb(n - 2, m - 2) for m in range(2, n + 1)
    )
    a = math.inf if denom == 0 else top / denom
    return ThresholdResult(a, "bernoulli", "closed_form", {"n": n, "p": p})


def star_threshold(n: int) -> ThresholdResult:
    return ThresholdResult(float(n + 1), "star", "closed_form", {"n": n})


def cycle_threshold(n: int) -> ThresholdResult:
    """Odd cycles: ``cos(pi / 2n)^-2``.  Even cycles: the uniform point is never stable."""
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    if n % 2 == 0:
        return ThresholdResult(1.0, "cycle", "closed_form", {"n": n}, (NEVER_STABLE,))
    return ThresholdResult(math.cos(math.pi / (2 * n)) ** -2, "cycle", "closed_form", {"n": n})


def complete_threshold(n_v: int) -> ThresholdResult:
    if n_v < 3:
        raise ValueError("complete graph needs n_v >= 3")
    if n_v == 3:
        return ThresholdResult(4.0 / 3.0, "complete", "closed_form", {"n_v": 3})
    return ThresholdResult(1.0, "complete", "closed_form", {"n_v": n_v}, (NEVER_STABLE,))


def reduced_fixed_m_threshold(n: int, m: int, k: int) -> ThresholdResult:
    """Threshold of ``((1/k)_k, (0)_{n-k})`` in the fixed-size model; needs ``n - m + 1 <= k <= n``."""
    if not (1 <= m <= n and n - m + 1 <= k <= n):
        raise ValueError(f"need n-m+1 <= k <= n, got n={n}, m={m}, k={k}")
    total = sum(
        _comb(n - k, r) / (m - r) ** 2 * _comb(k - 2, m - r - 2)
        for r in range(max(m - k, 0), min(n - k, m - 2) + 1)
    )
    a = math.inf if total == 0 else math.comb(n, m) / (k * k * total)
    return ThresholdResult(a, "reduced_fixed_m", "closed_form", {"n": n, "m": m, "k": k})


def star_tangency_alpha(n: int, k: int) -> ThresholdResult:
    """Exponent at which the two non-uniform star branches with ``k`` large leaves are born."""
    a, _ = star_tangency(n, k)
    return ThresholdResult(a, "star_tangency", "bisection", {"n": n, "k": k})


def whisker_g(alpha: float) -> float:
    """``(alpha - 1) log(2 (alpha - 1)) - alpha log(alpha)``; convex with minimum ``-log 2`` at ``alpha = 2``."""
    return (alpha - 1.0) * math.log(2.0 * (alpha - 1.0)) - alpha * math.log(alpha)


def whisker_alpha_r(r: int) -> ThresholdResult:
    """Exponent above which the symmetric ``whisker(r, r)`` has interior equilibria.

    ``g(alpha) = log((1 + r)/2)`` has its relevant root right of the minimiser
    ``alpha = 2``; for ``r = 1`` the root at ``alpha = 1`` is spurious.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    target = math.log((1.0 + r) / 2.0)
    a = brentq(lambda x: whisker_g(x) - target, 2.0, 100.0, xtol=BISECT_TOL)
    return ThresholdResult(a, "whisker", "bisection", {"r": r, "s": r})


def numeric_threshold(
    model_at: Callable[[float], WarmModel],
    point_at: Callable[[float], np.ndarray],
    lo: float,
    hi: float,
    family: str = "model",
    params: dict | None = None,
    tol: float = BISECT_TOL,
) -> ThresholdResult:
    """Exponent where the top real part of the spectrum at ``point_at(alpha)`` crosses zero.

    Independent of every closed form above; used to cross-validate them.
    """

    def top(a):
        return max_real_eigenvalue(model_at(a), point_at(a))

    f_lo, f_hi = top(lo), top(hi)
    if f_lo * f_hi > 0:
        raise ValueError(f"no stability change on [{lo}, {hi}] (top real parts {f_lo:.3g}, {f_hi:.3g})")
    a = brentq(top, lo, hi, xtol=tol)
    return ThresholdResult(a, family, "bisection", dict(params or {}))


def uniform_numeric_threshold(model: WarmModel, hi: float, lo: float = 1.0 + 1e-9, family: str = "model") -> ThresholdResult:
    n = model.n
    return numeric_threshold(
        model.with_alpha, lambda a: np.full(n, 1.0 / n), lo, hi, family, {"n": n}
    )


def family_threshold(family: str, params: dict) -> ThresholdResult:
    """Dispatch used by the command line."""
    def need(*keys):
        missing = [k for k in keys if k not in params]
        if missing:
            raise ModelError(f"missing parameter(s) {missing} for {family} threshold")
        return [params[k] for k in keys]

    if family == "star":
        if "k" in params:
            n, k = need("n", "k")
            return star_tangency_alpha(int(n), int(k))
        (n,) = need("n")
        return star_threshold(int(n))
    if family == "cycle":
        (n,) = need("n")
        return cycle_threshold(int(n))
    if family == "triangle":
        return complete_threshold(3)
    if family == "complete":
        (n_v,) = need("n_v")
        return complete_threshold(int(n_v))
    if family == "fixed_m":
        if "k" in params:
            n, m, k = need("n", "m", "k")
            return reduced_fixed_m_threshold(int(n), int(m), int(k))
        n, m = need("n", "m")
        return fixed_m_threshold(int(n), int(m))
    if family == "bernoulli":
        n, p = need("n", "p")
        return bernoulli_threshold(int(n), float(p))
    if family == "whisker":
        (r,) = need("r")
        if int(params.get("s", r)) != int(r):
            raise ModelError("whisker threshold is known only for the symmetric case r = s")
        return whisker_alpha_r(int(r))
    raise ModelError(f"no closed-form threshold for family {family!r}")


__all__ = [
    "NEVER_STABLE",
    "PRECONDITION",
    "ThresholdResult",
    "bernoulli_threshold",
    "complete_threshold",
    "cycle_threshold",
    "family_threshold",
    "fixed_m_threshold",
    "numeric_threshold",
    "reduced_fixed_m_threshold",
    "star_tangency_alpha",
    "star_threshold",
    "uniform_numeric_threshold",
    "uniform_threshold",
    "uniform_threshold_from_sizes",
    "whisker_alpha_r",
    "whisker_g",
]
