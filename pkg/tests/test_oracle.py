import numpy as np
import pytest

from fdirnet.blocklin import BlockMat, BlockStructure, BlockVec
from fdirnet.exceptions import InfeasibleError
from fdirnet.oracle import LinearizedProblem, brute_force_support, centralized_l21


def identity_problem(b, block_len=2):
    n = len(b)
    assert n % block_len == 0
    k = n // block_len
    rows = BlockStructure((block_len,) * k)
    R = BlockMat(rows, rows)
    for i in range(k):
        R.set_block(i, i, np.eye(block_len))
    return LinearizedProblem(R, np.asarray(b, float))


def random_problem(rng, k=5, d=2, m_rows=3, row_len=2):
    rows = BlockStructure((row_len,) * m_rows)
    cols = BlockStructure((d,) * k)
    R = BlockMat(rows, cols)
    for l in range(m_rows):
        for i in range(k):
            R.set_block(l, i, rng.normal(size=(row_len, d)))
    return R, cols


def test_identity_single_active_block():
    # R = I: the constraint pins v exactly; the solve must return b itself
    p = identity_problem([3.0, 4.0, 0.0, 0.0])
    v = centralized_l21(p, tol=1e-12)
    assert v.data == pytest.approx([3.0, 4.0, 0.0, 0.0], abs=1e-10)


def test_zero_rhs_gives_zero():
    p = identity_problem([0.0] * 6)
    v = centralized_l21(p)
    assert np.linalg.norm(v.data) <= 1e-10


def test_projection_is_exact(rng):
    # the returned iterate satisfies the constraint to projection accuracy
    for _ in range(5):
        R, cols = random_problem(rng)
        v_true = np.zeros(cols.total)
        v_true[cols.slice_of(2)] = rng.normal(size=2)
        p = LinearizedProblem(R, R.to_dense() @ v_true)
        v = centralized_l21(p, tol=1e-12)
        assert np.linalg.norm(R.to_dense() @ v.data - p.b_lin) <= 1e-10


def test_planted_single_block_recovery(rng):
    # a single faulty block with enough independent rows is the unique
    # sparsest explanation; the convex solve must land on it
    for _ in range(10):
        R, cols = random_problem(rng, k=5, d=2, m_rows=4)
        v_true = np.zeros(cols.total)
        v_true[cols.slice_of(1)] = rng.normal(size=2) * 2.0
        p = LinearizedProblem(R, R.to_dense() @ v_true)
        v = centralized_l21(p, tol=1e-12)
        norms = v.block_norms()
        assert norms[1] == max(norms)


def test_brute_force_identity():
    p = identity_problem([3.0, 4.0, 0.0, 0.0, 0.0, 0.0])
    supp, v = brute_force_support(p, max_support=2)
    assert supp == frozenset({0})
    assert v.data == pytest.approx([3.0, 4.0, 0.0, 0.0, 0.0, 0.0])


def test_brute_force_planted_two_blocks(rng):
    R, cols = random_problem(rng, k=6, d=2, m_rows=5)
    v_true = np.zeros(cols.total)
    v_true[cols.slice_of(0)] = [1.0, -2.0]
    v_true[cols.slice_of(4)] = [0.5, 0.5]
    p = LinearizedProblem(R, R.to_dense() @ v_true)
    supp, v = brute_force_support(p, max_support=2)
    assert supp == frozenset({0, 4})
    assert np.linalg.norm(v.data - v_true) <= 1e-8


def test_brute_force_empty_support():
    p = identity_problem([0.0] * 4)
    supp, v = brute_force_support(p, max_support=2)
    assert supp == frozenset()
    assert np.linalg.norm(v.data) == 0.0


def test_brute_force_guard():
    p = identity_problem([0.0] * 60, block_len=2)
    with pytest.raises(ValueError):
        brute_force_support(p, max_support=15, guard=1000)


def test_infeasible_rhs_rejected(rng):
    # a rank-deficient R with b off its range must be flagged, not silently
    # least-squares-fit
    rows = BlockStructure((2, 2))
    cols = BlockStructure((2,))
    R = BlockMat(rows, cols)
    R.set_block(0, 0, np.eye(2))
    R.set_block(1, 0, np.eye(2))
    p = LinearizedProblem(R, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(InfeasibleError):
        centralized_l21(p)
    with pytest.raises(InfeasibleError):
        brute_force_support(p, max_support=1)


def test_l21_matches_brute_force_when_sparse_enough(rng):
    # with many independent rows the convex relaxation finds the same
    # support as exhaustive search
    agree = 0
    for _ in range(5):
        R, cols = random_problem(rng, k=5, d=2, m_rows=5)
        v_true = np.zeros(cols.total)
        i = int(rng.integers(0, 5))
        v_true[cols.slice_of(i)] = rng.normal(size=2) * 1.5
        p = LinearizedProblem(R, R.to_dense() @ v_true)
        v = centralized_l21(p, tol=1e-12)
        supp, _ = brute_force_support(p, max_support=2)
        norms = v.block_norms()
        conv_supp = frozenset(np.flatnonzero(norms > 1e-6 * norms.max()).tolist())
        agree += conv_supp == supp
    assert agree == 5
