"""Inter-agent measurement models, the stacked map, its block Jacobian,
and search-space / rank diagnostics.

Agent states are positions in R^d (d = 2 or 3). Supported models:

    displacement     p_i - p_j                       (dim d,  arity 2)
    distance         ||p_i - p_j||                   (dim 1,  arity 2)
    bearing          (p_i - p_j) / ||p_i - p_j||     (dim d,  arity 2)
    tdoa             ||p_i - p_j|| - ||p_i - p_k||   (dim 1,  arity 3)
    subtended_angle  arccos(u_ij . u_ik)             (dim 1,  arity 3)

Separations below EPS_DOM are treated as coincident positions and rejected,
as the models and/or their derivatives degenerate there.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .blocklin import BlockMat, BlockStructure, BlockVec
from .exceptions import DomainViolation
from .topology import Hypergraph

# domain floor for separation norms, in state units
EPS_DOM = 1e-9


class MeasurementKind(enum.Enum):
    DISPLACEMENT = "displacement"
    DISTANCE = "distance"
    BEARING = "bearing"
    TDOA = "tdoa"
    SUBTENDED_ANGLE = "subtended_angle"

    @property
    def arity(self) -> int:
        return 3 if self in (MeasurementKind.TDOA, MeasurementKind.SUBTENDED_ANGLE) else 2

    def output_dim(self, d: int) -> int:
        if self in (MeasurementKind.DISPLACEMENT, MeasurementKind.BEARING):
            return d
        return 1


def _separation(pi, pj, edge=None):
    diff = pi - pj
    dist = np.linalg.norm(diff)
    if dist < EPS_DOM:
        raise DomainViolation("coincident positions", edge=edge)
    return diff, dist


def eval_edge(kind: MeasurementKind, d: int, states) -> np.ndarray:
    """Evaluate one measurement model at the given ordered member states."""
    states = [np.asarray(s, dtype=float) for s in states]
    if len(states) != kind.arity:
        raise ValueError(f"{kind.value} takes {kind.arity} states, got {len(states)}")
    if any(s.shape != (d,) for s in states):
        raise ValueError(f"states must have length {d}")

    if kind is MeasurementKind.DISPLACEMENT:
        return states[0] - states[1]
    if kind is MeasurementKind.DISTANCE:
        _, dist = _separation(states[0], states[1])
        return np.array([dist])
    if kind is MeasurementKind.BEARING:
        diff, dist = _separation(states[0], states[1])
        return diff / dist
    if kind is MeasurementKind.TDOA:
        _, dij = _separation(states[0], states[1])
        _, dik = _separation(states[0], states[2])
        return np.array([dij - dik])
    # subtended angle
    dj, dij = _separation(states[0], states[1])
    dk, dik = _separation(states[0], states[2])
    c = float(np.dot(dj / dij, dk / dik))
    return np.array([np.arccos(np.clip(c, -1.0, 1.0))])


def jacobian_edge(kind: MeasurementKind, d: int, states) -> list[np.ndarray]:
    """Analytic Jacobian blocks of one model, ordered like the member states."""
    states = [np.asarray(s, dtype=float) for s in states]
    eye = np.eye(d)

    if kind is MeasurementKind.DISPLACEMENT:
        return [eye, -eye]
    if kind is MeasurementKind.DISTANCE:
        diff, dist = _separation(states[0], states[1])
        u = (diff / dist).reshape(1, d)
        return [u, -u]
    if kind is MeasurementKind.BEARING:
        diff, dist = _separation(states[0], states[1])
        u = diff / dist
        proj = (eye - np.outer(u, u)) / dist
        return [proj, -proj]
    if kind is MeasurementKind.TDOA:
        dj, dij = _separation(states[0], states[1])
        dk, dik = _separation(states[0], states[2])
        uij = (dj / dij).reshape(1, d)
        uik = (dk / dik).reshape(1, d)
        return [uij - uik, -uij, uik]
    # subtended angle: theta = arccos(u_ij . u_ik)
    dj, dij = _separation(states[0], states[1])
    dk, dik = _separation(states[0], states[2])
    uij = dj / dij
    uik = dk / dik
    c = float(np.dot(uij, uik))
    if abs(c) >= 1.0 - EPS_DOM:
        raise DomainViolation("subtended angle at arccos derivative singularity")
    proj_ij = (np.eye(d) - np.outer(uij, uij)) / dij
    proj_ik = (np.eye(d) - np.outer(uik, uik)) / dik
    # rows of dc/dp; chain through -1/sqrt(1-c^2)
    dc_di = uik @ proj_ij + uij @ proj_ik
    dc_dj = -(uik @ proj_ij)
    dc_dk = -(uij @ proj_ik)
    scale = -1.0 / np.sqrt(1.0 - c * c)
    return [
        (scale * dc_di).reshape(1, d),
        (scale * dc_dj).reshape(1, d),
        (scale * dc_dk).reshape(1, d),
    ]


@dataclass(frozen=True)
class MeasurementStack:
    """The stacked measurement map over a tagged hypergraph.

    Edge l's kind comes from the hypergraph's tag list; edge members are
    ordered (role order i, j[, k] matters for tdoa and subtended angle).
    """

    graph: Hypergraph
    d: int

    def __post_init__(self):
        if self.graph.kinds is None:
            raise ValueError("hypergraph must carry measurement kinds")
        for l, (e, kind) in enumerate(zip(self.graph.edges, self.graph.kinds)):
            if not isinstance(kind, MeasurementKind):
                raise TypeError(f"edge {l} kind must be a MeasurementKind")
            if len(e) != kind.arity:
                raise ValueError(
                    f"edge {l}: {kind.value} needs {kind.arity} members, got {len(e)}"
                )

    @property
    def row_structure(self) -> BlockStructure:
        return BlockStructure(
            tuple(k.output_dim(self.d) for k in self.graph.kinds)
        )

    @property
    def col_structure(self) -> BlockStructure:
        return BlockStructure((self.d,) * self.graph.num_vertices)

    def _members_states(self, l: int, p: BlockVec):
        return [p.block(i) for i in self.graph.edges[l]]


def eval_stack(stack: MeasurementStack, p: BlockVec) -> BlockVec:
    """y = Phi(p); raises DomainViolation with the offending edge index."""
    out = BlockVec(stack.row_structure)
    for l in range(stack.graph.num_edges):
        try:
            out.block(l)[:] = eval_edge(
                stack.graph.kinds[l], stack.d, stack._members_states(l, p)
            )
        except DomainViolation as exc:
            raise DomainViolation(str(exc), edge=l) from exc
    return out


def jacobian_stack(stack: MeasurementStack, p: BlockVec) -> BlockMat:
    """Block Jacobian R; block (l,i) is present iff agent i is in edge l."""
    R = BlockMat(stack.row_structure, stack.col_structure)
    for l in range(stack.graph.num_edges):
        try:
            blocks = jacobian_edge(
                stack.graph.kinds[l], stack.d, stack._members_states(l, p)
            )
        except DomainViolation as exc:
            raise DomainViolation(str(exc), edge=l) from exc
        for i, content in zip(stack.graph.edges[l], blocks):
            R.set_block(l, i, content)
    return R


def jacobian_fd_check(stack: MeasurementStack, p: BlockVec, step: float = 1e-6) -> float:
    """Max relative error between the analytic Jacobian and central differences."""
    analytic = jacobian_stack(stack, p).to_dense()
    n = p.structure.total
    fd = np.zeros_like(analytic)
    for col in range(n):
        dp = np.zeros(n)
        dp[col] = step
        y_plus = eval_stack(stack, BlockVec(p.structure, p.data + dp)).data
        y_minus = eval_stack(stack, BlockVec(p.structure, p.data - dp)).data
        fd[:, col] = (y_plus - y_minus) / (2.0 * step)
    scale = max(np.max(np.abs(analytic)), 1.0)
    return float(np.max(np.abs(analytic - fd)) / scale)


RANK_TOL = 1e-10  # relative to the largest singular value


def singular_values(R: BlockMat) -> np.ndarray:
    dense = R.to_dense()
    if dense.size == 0:
        return np.zeros(0)
    return np.linalg.svd(dense, compute_uv=False)


def numerical_rank(R: BlockMat, rank_tol: float = RANK_TOL) -> int:
    sv = singular_values(R)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > rank_tol * sv[0]))


def search_space_dim(R: BlockMat, rank_tol: float = RANK_TOL) -> tuple[int, int]:
    """(rank k, dimension n - k) of the level set through the configuration."""
    k = numerical_rank(R, rank_tol)
    return k, R.col_structure.total - k


def regular_point_check(R: BlockMat, rank_tol: float = RANK_TOL) -> bool:
    """True iff the Jacobian has full row rank (surjective differential)."""
    return numerical_rank(R, rank_tol) == R.row_structure.total
