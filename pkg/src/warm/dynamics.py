"""Mean-field vector field of a WARM, its Jacobian, the Lyapunov function and the ODE flow.

For ``W(x) = x**alpha`` the field is

    F_i(v) = -v_i + sum_{A containing i} p_A v_i**alpha / sum_{j in A} v_j**alpha

and the Jacobian is taken in the ambient coordinates of R^n.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import WarmModel, colours_of

SIMPLEX_TOL = 1e-10


class DegenerateFaceError(ValueError):
    """A positive-probability subset has only zero components, so the field is 0/0 there."""


class FlowError(RuntimeError):
    pass


def powers(v: np.ndarray, a: float) -> np.ndarray:
    """``v**a`` with exact zeros for ``v <= 0`` (``a > 0``)."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = np.exp(a * np.log(v[pos]))
    return out


def as_simplex_point(v, tol: float = SIMPLEX_TOL) -> np.ndarray:
    x = np.asarray(v, dtype=float)
    if x.ndim != 1:
        raise ValueError("a simplex point is a 1-d vector")
    if np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        raise ValueError(f"point {x} is not on the simplex (tol {tol})")
    return np.clip(x, 0.0, None)


def _subset_sums(model: WarmModel, w: np.ndarray) -> np.ndarray:
    S = model.dist.incidence @ w
    bad = np.flatnonzero(S <= 0.0)
    if bad.size:
        A = colours_of(model.dist.masks[bad[0]])
        raise DegenerateFaceError(f"subset {A} has all components zero")
    return S


def drift(model: WarmModel, v) -> np.ndarray:
    """The vector field ``F(v)``."""
    v = np.asarray(v, dtype=float)
    w = powers(v, model.alpha)
    S = _subset_sums(model, w)
    return -v + w * (model.dist.incidence.T @ (model.dist.prob_array / S))


def selection_probabilities(model: WarmModel, v) -> np.ndarray:
    """Probability that each colour is the next one reinforced when proportions are ``v``."""
    v = np.asarray(v, dtype=float)
    w = powers(v, model.alpha)
    S = _subset_sums(model, w)
    return w * (model.dist.incidence.T @ (model.dist.prob_array / S))


def jacobian(model: WarmModel, v) -> np.ndarray:
    """``D[i, k] = dF_i / dv_k``.

    Rows and columns of zero components come out as ``-1`` on the diagonal and
    ``0`` elsewhere, since ``v**(alpha - 1)`` vanishes there.
    """
    v = np.asarray(v, dtype=float)
    a = model.alpha
    M = model.dist.incidence
    p = model.dist.prob_array
    w = powers(v, a)
    w1 = powers(v, a - 1.0)
    S = _subset_sums(model, w)
    first = M.T @ (p / S)
    pair = M.T @ ((p / S**2)[:, None] * M)
    D = -a * (w[:, None] * w1[None, :]) * pair
    D[np.diag_indices_from(D)] += a * w1 * first
    D[np.diag_indices_from(D)] -= 1.0
    return D


def lyapunov(model: WarmModel, x) -> float:
    """``L(x) = -sum x_i + (1/alpha) sum_A p_A log(sum_{j in A} x_j**alpha)``."""
    x = np.asarray(x, dtype=float)
    S = _subset_sums(model, powers(x, model.alpha))
    return float(-x.sum() + np.dot(model.dist.prob_array, np.log(S)) / model.alpha)


def lyapunov_gradient(model: WarmModel, x) -> np.ndarray:
    """Gradient of :func:`lyapunov`; satisfies ``x * grad = drift``."""
    x = np.asarray(x, dtype=float)
    S = _subset_sums(model, powers(x, model.alpha))
    return -1.0 + powers(x, model.alpha - 1.0) * (model.dist.incidence.T @ (model.dist.prob_array / S))


def lyapunov_rate(model: WarmModel, v) -> float:
    """``dL/dt`` along the flow, ``sum_i v_i (dL/dv_i)**2``."""
    g = lyapunov_gradient(model, v)
    return float(np.dot(np.asarray(v, dtype=float), g * g))


@dataclass
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    lyapunov: np.ndarray
    terminal_drift_norm: float
    stop_reason: str = "t_max"
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]

    def write_csv(self, path: str | Path) -> None:
        n = self.points.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x_{i}" for i in range(n)] + ["L"])
            for t, x, L in zip(self.times, self.points, self.lyapunov):
                writer.writerow([repr(float(t))] + [repr(float(c)) for c in x] + [repr(float(L))])


def _project(x: np.ndarray) -> np.ndarray:
    x = np.where(x < 0.0, 0.0, x)
    return x / x.sum()


def flow(
    model: WarmModel,
    v0,
    t_max: float = 200.0,
    step: float = 1e-2,
    *,
    record_stride: int = 1,
    tol: float = 1e-12,
    plateau_steps: int = 1000,
    plateau_tol: float = 1e-14,
) -> Trajectory:
    """Integrate ``dv/dt = F(v)`` with fixed-step RK4, renormalising onto the simplex each step.

    Stops at ``t_max``, when ``max|F| < tol``, or when ``L`` has not increased
    by more than ``plateau_tol`` over ``plateau_steps`` steps while ``max|F|``
    has not at least halved.  The lyapunov
    column holds ``L`` at every recorded point.
    """
    if not step > 0:
        raise FlowError(f"step must be positive, got {step}")
    if record_stride < 1:
        raise FlowError("record_stride must be >= 1")
    x = as_simplex_point(v0)
    n_steps = int(np.ceil(t_max / step - 1e-9))
    F = drift(model, x)
    L = lyapunov(model, x)
    times, pts, Ls = [0.0], [x.copy()], [L]
    best_L, best_at, window_F = L, 0, np.max(np.abs(F))
    reason = "t_max"
    t = 0.0
    k = 0
    h = step

    def f(y):
        return drift(model, np.where(y < 0.0, 0.0, y))

    for k in range(1, n_steps + 1):
        if np.max(np.abs(F)) < tol:
            reason = "converged"
            k -= 1
            break
        k1 = F
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = _project(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        t = k * step
        if not np.all(np.isfinite(x)):
            raise FlowError(f"non-finite state at t={t}")
        F = drift(model, x)
        L = lyapunov(model, x)
        if k % record_stride == 0:
            times.append(t)
            pts.append(x.copy())
            Ls.append(L)
        if L > best_L + plateau_tol:
            best_L, best_at, window_F = L, k, np.max(np.abs(F))
        elif k - best_at >= plateau_steps:
            # L has stalled; stop only if the drift has stalled too
            now = np.max(np.abs(F))
            if now > 0.5 * window_F:
                reason = "plateau"
                break
            best_at, window_F = k, now
    if times[-1] != t:
        times.append(t)
        pts.append(x.copy())
        Ls.append(L)
    return Trajectory(
        np.array(times),
        np.array(pts),
        np.array(Ls),
        float(np.max(np.abs(F))),
        reason,
        {"steps": k, "step": step},
    )
