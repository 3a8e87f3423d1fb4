from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Tuple, Any

import numpy as np

from .errors import GraphError

INDEX_DTYPE = np.int32


class GraphKind(Enum):
    BOX = "box"
    TORUS_PRODUCT = "torus-product"
    STRIP = "strip"


@dataclass(frozen=True)
class Adjacency:
    """Symmetric CSR adjacency; every undirected edge appears once per direction"""
    indptr: np.ndarray
    indices: np.ndarray
    edge_ids: np.ndarray

    def incident(self, vertex: int) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[vertex], self.indptr[vertex + 1]
        return self.indices[lo:hi], self.edge_ids[lo:hi]


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """
    Immutable indexed graph.

    For a box, `coords[v]` is the lattice coordinate of v and `sides` holds the
    side lengths. For a torus product H x Z/nZ, `coords[v] = (h, t)` and vertex
    index is t*|V(H)| + h. `winding[e]` is the displacement along Z/nZ when
    edge e is traversed from `edges[e, 0]` to `edges[e, 1]`.
    """
    kind: GraphKind
    coords: np.ndarray
    edges: np.ndarray
    winding: np.ndarray
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def vertex_count(self) -> int:
        return int(self.coords.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.coords.shape[1])

    @property
    def sides(self) -> Tuple[int, ...]:
        return tuple(self.params.get("sides", ()))

    @property
    def fiber_size(self) -> int:
        return int(self.params.get("fiber_size", 0))

    @property
    def cycle_length(self) -> int:
        return int(self.params.get("n", 0))

    @cached_property
    def adjacency(self) -> Adjacency:
        u, v = self.edges[:, 0], self.edges[:, 1]
        heads = np.concatenate([u, v])
        tails = np.concatenate([v, u])
        ids = np.concatenate([np.arange(self.edge_count)] * 2)
        order = np.lexsort((ids, tails, heads))
        counts = np.bincount(heads, minlength=self.vertex_count)
        indptr = np.zeros(self.vertex_count + 1, dtype=INDEX_DTYPE)
        np.cumsum(counts, out=indptr[1:])
        return Adjacency(
            indptr=indptr,
            indices=tails[order].astype(INDEX_DTYPE),
            edge_ids=ids[order].astype(INDEX_DTYPE),
        )

    @cached_property
    def _edge_lookup(self) -> Dict[Tuple[int, int], int]:
        return {(int(u), int(v)): e for e, (u, v) in enumerate(self.edges)}

    def edge_id(self, u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        if key not in self._edge_lookup:
            raise GraphError(f"No edge between vertices {u} and {v}")
        return self._edge_lookup[key]

    def check_vertex(self, vertex: int) -> int:
        if not 0 <= int(vertex) < self.vertex_count:
            raise GraphError(f"Vertex {vertex} outside 0..{self.vertex_count - 1}")
        return int(vertex)

    def check_edge(self, edge: int) -> int:
        if not 0 <= int(edge) < self.edge_count:
            raise GraphError(f"Edge {edge} outside 0..{self.edge_count - 1}")
        return int(edge)

    def vertex_index(self, coords) -> int:
        """Index of the vertex with the given coordinates"""
        if self.kind is not GraphKind.BOX:
            point = tuple(int(c) for c in coords)
            h, t = point
            if not (0 <= h < self.fiber_size and 0 <= t < self.cycle_length):
                raise GraphError(f"Coordinates {point} outside the torus product")
            return t * self.fiber_size + h
        point = np.asarray(coords, dtype=np.int64)
        sides = np.asarray(self.sides, dtype=np.int64)
        if point.shape != sides.shape or np.any(point < 0) or np.any(point >= sides):
            raise GraphError(f"Coordinates {tuple(point)} outside box {tuple(sides)}")
        strides = np.concatenate([[1], np.cumprod(sides[:-1])])
        return int(point @ strides)

    def step(self, edge: int, start: int) -> int:
        """Signed winding increment for traversing `edge` away from `start`"""
        u, v = self.edges[edge]
        if start == u:
            return int(self.winding[edge])
        if start == v:
            return -int(self.winding[edge])
        raise GraphError(f"Vertex {start} is not an endpoint of edge {edge}")


@dataclass(frozen=True, eq=False)
class LatticeWindow:
    """A box carrying the placement of lattice point 0"""
    graph: WeightedGraph
    origin: Tuple[int, ...]
    margin: int

    def vertex(self, point) -> int:
        shifted = np.asarray(self.origin, dtype=np.int64) + np.asarray(point, dtype=np.int64)
        return self.graph.vertex_index(shifted)

    def point(self, vertex: int) -> Tuple[int, ...]:
        coords = self.graph.coords[self.graph.check_vertex(vertex)]
        return tuple(int(c) - o for c, o in zip(coords, self.origin))

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        coords = self.graph.coords
        sides = np.asarray(self.graph.sides)
        mask = np.any((coords == 0) | (coords == sides - 1), axis=1)
        mask.flags.writeable = False
        return mask


def freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array
