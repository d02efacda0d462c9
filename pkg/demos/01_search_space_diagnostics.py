"""How many independent constraints does a sensing topology impose?

The measurement map sends the stacked agent states to the measurement
vector; the set of states consistent with a given measurement is (at a
regular point) a manifold of dimension n - rank(Jacobian). This script
walks through the classic distance-triangle example and shows how
redundant edges saturate the rank while broken geometry breaks
regularity.
"""

import numpy as np

from fdirnet import (
    BlockVec,
    Hypergraph,
    MeasurementKind,
    MeasurementStack,
    jacobian_stack,
    regular_point_check,
    search_space_dim,
    singular_values,
)


def report(title, stack, p):
    R = jacobian_stack(stack, p)
    k, dim = search_space_dim(R)
    print(f"--- {title}")
    print(f"    rank k = {k}, search-space dimension n - k = {dim}, "
          f"regular point: {regular_point_check(R)}")
    print("    singular values:", np.array2string(singular_values(R),
                                                  precision=3))


p = BlockVec.from_blocks([[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]])

# Three agents, three pairwise distances: the rank is 3 and the remaining
# three freedoms are exactly the planar rigid-body motions (two
# translations and a rotation).
tri = MeasurementStack(
    Hypergraph(3, ((0, 1), (1, 2), (0, 2)), (MeasurementKind.DISTANCE,) * 3), 2)
report("distance triangle", tri, p)

# A fourth distance cannot add information: the rank stays at 3, but the
# Jacobian is no longer full row rank, so the configuration stops being a
# regular point.
quad = MeasurementStack(
    Hypergraph(3, ((0, 1), (1, 2), (0, 2), (0, 1)),
               (MeasurementKind.DISTANCE,) * 4), 2)
report("triangle + duplicated edge", quad, p)

# Displacement edges pin relative positions completely; a spanning chain
# leaves only the two global translations.
chain = MeasurementStack(
    Hypergraph(3, ((0, 1), (1, 2)), (MeasurementKind.DISPLACEMENT,) * 2), 2)
report("displacement chain", chain, p)

# A degenerate (collinear) triangle: the distance rows become linearly
# dependent and a rank is lost.
flat = BlockVec.from_blocks([[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]])
report("collinear triangle", tri, flat)
