"""Minimization of f(v) = ||v|| + 1/2 ||A v - b||^2.

The minimizer splits into two cases:

  * ||A^T b|| <= 1  ->  v* = 0 (checked in closed form, no iterations), or
  * ||A^T b|| > 1   ->  v* != 0 and satisfies A^T A v* + v*/||v*|| = A^T b.

In the second case the minimizer is bounded away from the non-differentiable
origin, so Nesterov's accelerated gradient method applies on the region
||v|| >= r_floor where f is smooth, giving O(1/t^2) instead of the O(1/sqrt t)
of subgradient descent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceFailure

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 50_000


class ProxCase(enum.Enum):
    ZERO = "zero"
    INTERIOR = "interior"


@dataclass(frozen=True)
class ProxProblem:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
            raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass
class ProxSolution:
    v_star: np.ndarray
    case: ProxCase
    stationarity_residual: float
    iterations: int
    # per-iteration stationarity residuals, only filled when requested
    history: list[float] = field(default_factory=list, repr=False)


def objective(p: ProxProblem, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.linalg.norm(v) + 0.5 * np.linalg.norm(p.A @ v - p.b) ** 2)


def zero_test(p: ProxProblem) -> bool:
    """True iff v* = 0, i.e. ||A^T b|| <= 1."""
    return float(np.linalg.norm(p.A.T @ p.b)) <= 1.0


def stationarity_residual(p: ProxProblem, v) -> float:
    """||A^T A v + v/||v|| - A^T b||; undefined (raises) at v = 0."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValueError("stationarity expression undefined at v = 0")
    return float(np.linalg.norm(p.A.T @ (p.A @ v) + v / nv - p.A.T @ p.b))


def lambda_max(gram: np.ndarray, tol: float = 1e-10, max_iters: int = 10_000) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration."""
    n = gram.shape[0]
    if n == 1:
        return float(gram[0, 0])
    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(max_iters):
        w = gram @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v_new = w / nw
        lam_new = float(v_new @ (gram @ v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        v, lam = v_new, lam_new
    return lam


def _smooth_setup(p: ProxProblem):
    """Gram matrix, gradient target g = A^T b, Lipschitz bound, norm floor."""
    gram = p.A.T @ p.A
    g = p.A.T @ p.b
    ng = float(np.linalg.norm(g))
    lmax = lambda_max(gram)
    # stationarity implies ||v*|| >= (||g|| - 1)/lmax; stay at half that
    r_floor = (ng - 1.0) / (2.0 * lmax)
    L = lmax + 1.0 / r_floor
    return gram, g, ng, lmax, r_floor, L


def _grad(gram, g, v):
    nv = np.linalg.norm(v)
    return gram @ v + v / nv - g


def solve_prox(
    p: ProxProblem,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    accelerated: bool = True,
    record_history: bool = False,
) -> ProxSolution:
    """Global minimizer of f via the case split.

    The interior case runs (accelerated) gradient descent with step 1/L on
    the region ||v|| >= r_floor, where L bounds the Hessian. ``accelerated=
    False`` runs plain gradient descent with the same step, for comparison.
    Tracks the best-objective iterate; raises ConvergenceFailure (carrying
    the best iterate) if the budget runs out before the stationarity
    residual reaches tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if zero_test(p):
        return ProxSolution(np.zeros(p.n), ProxCase.ZERO, 0.0, 0)

    gram, g, ng, lmax, r_floor, L = _smooth_setup(p)
    step = 1.0 / L

    # exact minimizer when A^T A is proportional to the identity; always
    # nonzero and inside the differentiable region
    v = (1.0 - 1.0 / ng) * g / lmax
    v_prev = v.copy()
    best_v = v.copy()
    best_res = float(np.linalg.norm(_grad(gram, g, v)))
    t_mom = 1.0
    history: list[float] = []

    for it in range(1, max_iters + 1):
        if accelerated:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
            y = v + ((t_mom - 1.0) / t_next) * (v - v_prev)
            t_mom = t_next
        else:
            y = v
        ny = np.linalg.norm(y)
        if ny < r_floor:
            y = y * (r_floor / ny) if ny > 0 else best_v.copy()
        v_new = y - step * _grad(gram, g, y)
        nv = np.linalg.norm(v_new)
        if nv < r_floor:
            v_new = v_new * (r_floor / nv) if nv > 0 else y.copy()
        # gradient restart: momentum pointing uphill resets the schedule
        if accelerated and np.dot(y - v_new, v_new - v) > 0.0:
            t_mom = 1.0
        v_prev, v = v, v_new

        res = float(np.linalg.norm(_grad(gram, g, v)))
        if res < best_res:
            best_res = res
            best_v = v.copy()
        if record_history:
            history.append(best_res)
        if best_res <= tol:
            return ProxSolution(best_v, ProxCase.INTERIOR, best_res, it, history)

    raise ConvergenceFailure(
        f"prox solve did not reach tol={tol} in {max_iters} iterations",
        best=best_v,
        residual=stationarity_residual(p, best_v),
        iterations=max_iters,
    )
