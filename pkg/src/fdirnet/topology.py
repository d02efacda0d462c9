"""Hypergraph model of the sensing/communication topology.

Vertices are 0..num_vertices-1. Each hyperedge is an ordered tuple of
member vertices and carries an optional measurement-kind tag; ordering of
both vertices and edges is fixed at construction. Duplicate hyperedges are
allowed (two sensors can measure the same quantity).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


@dataclass(frozen=True)
class Hypergraph:
    num_vertices: int
    edges: tuple[tuple[int, ...], ...]
    kinds: tuple | None = None  # one tag per edge, or None

    def __post_init__(self):
        object.__setattr__(
            self, "edges", tuple(tuple(int(v) for v in e) for e in self.edges)
        )
        for l, e in enumerate(self.edges):
            if len(e) == 0:
                raise ValueError(f"edge {l} is empty")
            if len(set(e)) != len(e):
                raise ValueError(f"edge {l} repeats a vertex")
            for v in e:
                if not 0 <= v < self.num_vertices:
                    raise ValueError(f"edge {l} references vertex {v} out of range")
        if self.kinds is not None and len(self.kinds) != len(self.edges):
            raise ValueError("kinds must have one entry per edge")

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class NeighborTables:
    """Per-vertex neighbor sets N_i and incident-edge index sets E_i."""

    neighbors: tuple[frozenset, ...]
    incident: tuple[tuple[int, ...], ...]


def build_tables(g: Hypergraph) -> NeighborTables:
    neighbors = [set() for _ in range(g.num_vertices)]
    incident = [[] for _ in range(g.num_vertices)]
    for l, e in enumerate(g.edges):
        for i in e:
            incident[i].append(l)
            for j in e:
                if j != i:
                    neighbors[i].add(j)
    return NeighborTables(
        neighbors=tuple(frozenset(s) for s in neighbors),
        incident=tuple(tuple(sorted(ix)) for ix in incident),
    )


def validate_connectivity(g: Hypergraph) -> tuple[bool, list[list[int]]]:
    """Connectivity of the derived simple graph (pairs co-appearing in an edge).

    Returns (connected, components). A disconnected network cannot reach
    consensus across components, so callers should treat False as fatal for
    end-to-end runs.
    """
    rows, cols = [], []
    for e in g.edges:
        for i in e:
            for j in e:
                if i != j:
                    rows.append(i)
                    cols.append(j)
    adj = coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(g.num_vertices, g.num_vertices)
    )
    n_comp, labels = connected_components(adj, directed=False)
    components = [
        [int(v) for v in np.flatnonzero(labels == c)] for c in range(n_comp)
    ]
    return n_comp <= 1, components
