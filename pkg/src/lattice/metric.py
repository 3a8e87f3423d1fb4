"""dist_omega, deterministic geodesics and single-edge derivatives."""
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..models.environment import Environment
from ..models.errors import DisconnectedPairError
from ..models.graph import GraphKind, LatticeWindow, WeightedGraph
from ..models.paths import Geodesic
from .sampling import toggle_edge

# Absolute tolerance for comparing accumulated lengths
TOLERANCE = 1e-9


def length_tolerance(a: float) -> float:
    """TOLERANCE, shrunk below a/2 so a single edge is never mistaken for a tie"""
    return min(TOLERANCE, 0.5 * a)


def weighted_csgraph(graph: WeightedGraph, weights: np.ndarray) -> csr_matrix:
    adj = graph.adjacency
    n = graph.vertex_count
    return csr_matrix((weights[adj.edge_ids], adj.indices, adj.indptr), shape=(n, n))


def _search_limit(env: Environment, u: int, v: int) -> float:
    """In a box some monotone lattice path has length <= b * ||u - v||_1"""
    if env.graph.kind is not GraphKind.BOX:
        return np.inf
    coords = env.graph.coords
    return env.b * float(np.abs(coords[u] - coords[v]).sum()) + TOLERANCE


def distances_from(graph: WeightedGraph, weights: np.ndarray, sources, limit: float = np.inf) -> np.ndarray:
    """Single- or multi-source shortest-path lengths (Dijkstra, binary heap)"""
    return dijkstra(weighted_csgraph(graph, weights), directed=True, indices=sources, limit=limit)


def trace_back(
    graph: WeightedGraph,
    weights: np.ndarray,
    dist: np.ndarray,
    source: int,
    target: int,
) -> Tuple[List[int], List[int]]:
    """
    Walk from target to source along tight edges, taking the smallest edge id
    among equal-length predecessors. Returns (edges, vertices) ordered from source.
    """
    adj = graph.adjacency
    tol = length_tolerance(float(weights.min())) if weights.size else TOLERANCE
    vertex = target
    edges: List[int] = []
    vertices = [target]
    while vertex != source:
        neighbours, ids = adj.incident(vertex)
        slack = dist[neighbours] + weights[ids] - dist[vertex]
        # predecessors must be strictly closer to the source
        tight = np.flatnonzero((np.abs(slack) <= tol) & (dist[neighbours] < dist[vertex]))
        if tight.size == 0:
            raise DisconnectedPairError(f"No tight predecessor at vertex {vertex}")
        pick = tight[np.argmin(ids[tight])]
        edges.append(int(ids[pick]))
        vertex = int(neighbours[pick])
        vertices.append(vertex)
    edges.reverse()
    vertices.reverse()
    return edges, vertices


def distance(env: Environment, u: int, v: int) -> float:
    graph = env.graph
    u, v = graph.check_vertex(u), graph.check_vertex(v)
    if u == v:
        return 0.0
    dist = distances_from(graph, env.weights, u, _search_limit(env, u, v))
    if not np.isfinite(dist[v]):
        raise DisconnectedPairError(f"Vertices {u} and {v} are not connected")
    return float(dist[v])


def geodesic(env: Environment, u: int, v: int) -> Geodesic:
    graph = env.graph
    u, v = graph.check_vertex(u), graph.check_vertex(v)
    if u == v:
        return Geodesic(source=u, target=v, edges=(), vertices=(u,), length=0.0)
    dist = distances_from(graph, env.weights, u, _search_limit(env, u, v))
    if not np.isfinite(dist[v]):
        raise DisconnectedPairError(f"Vertices {u} and {v} are not connected")
    edges, vertices = trace_back(graph, env.weights, dist, u, v)
    return Geodesic(
        source=u,
        target=v,
        edges=tuple(edges),
        vertices=tuple(vertices),
        length=env.path_length(edges),
    )


def discrete_derivative(env: Environment, e: int, u: int, v: int) -> float:
    """rho_e f(omega) = (f(omega) - f(sigma_e omega)) / 2 for f = dist(u, v)"""
    e = env.graph.check_edge(e)
    return (distance(env, u, v) - distance(toggle_edge(env, e), u, v)) / 2.0


def discrete_derivative_fast(
    env: Environment, e: int, u: int, v: int, witness: Optional[Geodesic] = None
) -> float:
    """
    Same value as discrete_derivative. Raising an a-edge off the witness geodesic
    leaves a path of the old length and cannot shorten anything, so f is unchanged.
    """
    e = env.graph.check_edge(e)
    if witness is None:
        witness = geodesic(env, u, v)
    if env.bits[e] == 0 and e not in witness:
        return 0.0
    return (witness.length - distance(toggle_edge(env, e), u, v)) / 2.0


def touches_boundary(window: LatticeWindow, vertices: Iterable[int]) -> bool:
    ids = np.fromiter(vertices, dtype=np.int64)
    return bool(window.boundary_mask[ids].any()) if ids.size else False
