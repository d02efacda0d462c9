"""Per-agent ADMM state and the round updates.

Each agent i owns its error increment block xhat[i] (reported through
xbar[i]), copies w[j] of each neighbor's block, one scaled dual per
incident hyperedge constraint and one per pairwise consensus constraint.
Only scaled duals (dual / rho) are ever stored; they evolve as running
sums of constraint violations.

Local constraint functions, with r[l] the linearized measurement residual
of edge l and R the Jacobian blocks at the current linearization point:

    c_i^l(xhat_i, w) = R[l,i] xhat_i + sum_{j in edge l, j != i} R[l,j] w[j] - r[l]
    d_i^j(xhat_i)    = xhat_i - (neighbor j's copy of block i)

The x-update is the minimization of

    ||x*[i] + xhat_i|| + rho/2 ( sum_l ||c_i^l + lam[l]||^2
                               + sum_j ||d_i^j + mu[j]||^2 )

which, after the change of variables v = x*[i] + xhat_i, is exactly a
ProxProblem with A_i stacking sqrt(rho) R[l,i] blocks and sqrt(rho) I per
neighbor. Its closed-form zero test yields the thresholding fast path:
xbar[i] = -x*[i] without any iterative solve whenever the agent's
residual norm is at most 1/rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ProtocolViolation
from .prox import ProxProblem, ProxSolution, solve_prox, zero_test


@dataclass
class EdgeView:
    """What agent i knows about one incident hyperedge."""

    members: tuple[int, ...]  # ordered member agents, includes i
    R: dict[int, np.ndarray]  # Jacobian block per member
    r: np.ndarray  # linearized residual, length m_l


@dataclass
class AgentState:
    i: int
    rho: float
    x_star: np.ndarray  # accumulated error estimate block x*[i]
    edges: dict[int, EdgeView]  # keyed by edge index l, for l in E_i
    block_lengths: dict[int, int]  # n_j for self and every neighbor

    x_bar: np.ndarray = field(init=False)
    w: dict[int, np.ndarray] = field(init=False)  # my copy of neighbor j's block
    lam: dict[int, np.ndarray] = field(init=False)  # scaled dual per l in E_i
    mu: dict[int, np.ndarray] = field(init=False)  # scaled dual per j in N_i

    # received this round
    nbr_xbar: dict[int, np.ndarray] = field(init=False)
    nbr_mu: dict[int, np.ndarray] = field(init=False)  # mu_j^(i) from each j
    nbr_copy_of_me: dict[int, np.ndarray] = field(init=False)  # w_j^(i) from each j

    fast_path: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        self.x_star = np.asarray(self.x_star, dtype=float).copy()
        self.x_bar = np.zeros_like(self.x_star)
        self.w = {j: np.zeros(self.block_lengths[j]) for j in self.neighbors}
        self.lam = {l: np.zeros(len(ev.r)) for l, ev in self.edges.items()}
        self.mu = {j: np.zeros(len(self.x_star)) for j in self.neighbors}
        self.nbr_xbar = {}
        self.nbr_mu = {}
        self.nbr_copy_of_me = {}

    @property
    def n_i(self) -> int:
        return len(self.x_star)

    @property
    def neighbors(self) -> list[int]:
        out = set()
        for ev in self.edges.values():
            out.update(ev.members)
        out.discard(self.i)
        return sorted(out)

    @property
    def incident(self) -> list[int]:
        return sorted(self.edges)

    # ----- constraint functions ---------------------------------------

    def constraint_c(self, l: int, xhat_i, w: dict | None = None) -> np.ndarray:
        ev = self.edges[l]
        w = self.w if w is None else w
        out = ev.R[self.i] @ np.asarray(xhat_i, dtype=float) - ev.r
        for j in ev.members:
            if j == self.i:
                continue
            if j not in w:
                raise ProtocolViolation(f"agent {self.i}: no copy of {j} for edge {l}")
            out = out + ev.R[j] @ w[j]
        return out

    def constraint_d(self, j: int, xhat_i) -> np.ndarray:
        if j not in self.nbr_copy_of_me:
            raise ProtocolViolation(f"agent {self.i}: no copy-of-me from {j}")
        return np.asarray(xhat_i, dtype=float) - self.nbr_copy_of_me[j]

    # ----- x-update ---------------------------------------------------

    def assemble_local_problem(self) -> ProxProblem:
        """The subproblem in the variable v = x*[i] + xhat_i."""
        sq = np.sqrt(self.rho)
        rows_A, rows_b = [], []
        for l in self.incident:
            rows_A.append(sq * self.edges[l].R[self.i])
            rows_b.append(-sq * (self.constraint_c(l, -self.x_star) + self.lam[l]))
        eye = np.eye(self.n_i)
        for j in self.neighbors:
            rows_A.append(sq * eye)
            rows_b.append(-sq * (self.constraint_d(j, -self.x_star) + self.mu[j]))
        if not rows_A:
            # isolated agent: only the norm term remains, minimizer v = 0
            return ProxProblem(np.zeros((1, self.n_i)), np.zeros(1))
        return ProxProblem(np.vstack(rows_A), np.concatenate(rows_b))

    def residual_norm(self) -> float:
        """Norm of the dual-adjusted aggregated violations; equals
        ||A_i^T b_i|| / rho, so the fast path fires iff this is <= 1/rho."""
        acc = np.zeros(self.n_i)
        for l in self.incident:
            ev = self.edges[l]
            acc += ev.R[self.i].T @ (self.constraint_c(l, -self.x_star) + self.lam[l])
        for j in self.neighbors:
            acc += self.constraint_d(j, -self.x_star) + self.mu[j]
        return float(np.linalg.norm(acc))

    def primal_update_x(self, tol: float = 1e-9) -> np.ndarray:
        if self.residual_norm() <= 1.0 / self.rho:
            self.fast_path = True
            self.x_bar = -self.x_star.copy()
        else:
            self.fast_path = False
            sol = solve_prox(self.assemble_local_problem(), tol=tol)
            self.x_bar = sol.v_star - self.x_star
        return self.x_bar

    # ----- w-update ---------------------------------------------------

    def primal_update_w(self) -> dict[int, np.ndarray]:
        """Jointly minimize, over my copies {w[j]},

            sum_l ||c_i^l(xbar_i, w) + lam[l]||^2
          + sum_j ||xbar[j] - w[j] + mu_j^(i)||^2

        The identity blocks of the second sum make the normal equations
        positive definite, so a dense solve is exact.
        """
        nbrs = self.neighbors
        if not nbrs:
            return {}
        for j in nbrs:
            if j not in self.nbr_xbar or j not in self.nbr_mu:
                raise ProtocolViolation(
                    f"agent {self.i}: missing xbar/mu from neighbor {j}"
                )
        offs = {}
        pos = 0
        for j in nbrs:
            offs[j] = pos
            pos += self.block_lengths[j]
        dim = pos

        # normal equations (M^T M + I) W = M^T t1 + t2 with M the stacked
        # edge coefficient rows and t2 the consensus targets
        H = np.eye(dim)
        rhs = np.zeros(dim)
        for j in nbrs:
            sl = slice(offs[j], offs[j] + self.block_lengths[j])
            rhs[sl] = self.nbr_xbar[j] + self.nbr_mu[j]
        for l in self.incident:
            ev = self.edges[l]
            others = [j for j in ev.members if j != self.i]
            const = ev.R[self.i] @ self.x_bar - ev.r + self.lam[l]
            for ja in others:
                sla = slice(offs[ja], offs[ja] + self.block_lengths[ja])
                rhs[sla] -= ev.R[ja].T @ const
                for jb in others:
                    slb = slice(offs[jb], offs[jb] + self.block_lengths[jb])
                    H[sla, slb] += ev.R[ja].T @ ev.R[jb]
        sol = np.linalg.solve(H, rhs)
        for j in nbrs:
            self.w[j] = sol[offs[j] : offs[j] + self.block_lengths[j]].copy()
        return {j: self.w[j].copy() for j in nbrs}

    # ----- dual update ------------------------------------------------

    def dual_update(self) -> None:
        """Running-sum update of the scaled duals with the current violations."""
        for l in self.incident:
            self.lam[l] = self.lam[l] + self.constraint_c(l, self.x_bar)
        for j in self.neighbors:
            self.mu[j] = self.mu[j] + self.constraint_d(j, self.x_bar)

    # ----- diagnostics ------------------------------------------------

    def violation_norms(self) -> tuple[float, float]:
        """(max ||c||, max ||d||) at the current (xbar, w)."""
        max_c = 0.0
        for l in self.incident:
            max_c = max(max_c, float(np.linalg.norm(self.constraint_c(l, self.x_bar))))
        max_d = 0.0
        for j in self.neighbors:
            max_d = max(max_d, float(np.linalg.norm(self.constraint_d(j, self.x_bar))))
        return max_c, max_d
