import hashlib
import json
import math
import warnings
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..models.errors import GraphError, TransitivityWarning
from ..models.graph import GraphKind, LatticeWindow, WeightedGraph, INDEX_DTYPE, freeze
from ..utils.logger import ExperimentLogger

SCHEMA_VERSION = 1

logger = ExperimentLogger(component="graphs")


def _canonical(edges: np.ndarray, winding: np.ndarray):
    """Orient every edge low -> high and sort lexicographically"""
    flip = edges[:, 0] > edges[:, 1]
    edges = np.where(flip[:, None], edges[:, ::-1], edges)
    winding = np.where(flip, -winding, winding)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return edges[order], winding[order]


def assemble_graph(kind: GraphKind, coords, edges, winding, params) -> WeightedGraph:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    winding = np.asarray(winding, dtype=np.int8).reshape(-1)
    if np.any(edges[:, 0] == edges[:, 1]):
        raise GraphError("Self-loops are not allowed")
    edges, winding = _canonical(edges, winding)
    if len(edges) > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
        raise GraphError("Duplicate edges are not allowed")
    return WeightedGraph(
        kind=kind,
        coords=freeze(np.asarray(coords, dtype=np.int64)),
        edges=freeze(edges.astype(INDEX_DTYPE)),
        winding=freeze(winding),
        params=params,
    )


def box_edge_count(sides: Sequence[int]) -> int:
    total = 0
    for i, side in enumerate(sides):
        others = math.prod(s for j, s in enumerate(sides) if j != i)
        total += (side - 1) * others
    return total


def build_box(d: int, sides: Sequence[int]) -> WeightedGraph:
    """
    Grid graph on {0..L_1-1} x ... x {0..L_d-1} with nearest-neighbour edges.

    Vertex index is sum_i c_i * stride_i with axis 0 fastest, so the origin
    corner is vertex 0.
    """
    sides = [int(s) for s in sides]
    if d < 1:
        raise GraphError(f"Dimension must be at least 1, got {d}")
    if len(sides) != d:
        raise GraphError(f"Expected {d} side lengths, got {len(sides)}")
    if any(s < 2 for s in sides):
        raise GraphError(f"Every side must be at least 2, got {sides}")
    limit = np.iinfo(INDEX_DTYPE).max
    if math.prod(sides) > limit or 2 * box_edge_count(sides) > limit:
        raise GraphError(f"Box {sides} overflows the {np.dtype(INDEX_DTYPE).name} index type")

    vertex_count = math.prod(sides)
    index = np.arange(vertex_count, dtype=np.int64)
    coords = np.stack(np.unravel_index(index, sides, order="F"), axis=1)
    strides = np.concatenate([[1], np.cumprod(sides[:-1])]).astype(np.int64)

    edges = []
    for axis in range(d):
        lower = index[coords[:, axis] < sides[axis] - 1]
        edges.append(np.stack([lower, lower + strides[axis]], axis=1))
    edges = np.concatenate(edges)
    graph = assemble_graph(
        GraphKind.BOX, coords, edges, np.zeros(len(edges)), {"d": d, "sides": sides}
    )
    return graph


def cycle_rotations(k: int) -> list:
    """Transitivity certificate for the k-cycle labelled 0..k-1"""
    return [[(i + 1) % k for i in range(k)]]


def _check_certificate(h: nx.Graph, certificate: Iterable[Sequence[int]]) -> None:
    nodes = list(h.nodes)
    k = len(nodes)
    edges = {frozenset(e) for e in h.edges}
    generators = []
    for perm in certificate:
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(k)):
            raise GraphError(f"Certificate entry {perm} is not a permutation of 0..{k - 1}")
        if any(frozenset((perm[u], perm[v])) not in edges for u, v in h.edges):
            raise GraphError(f"Certificate entry {perm} is not an automorphism of H")
        generators.append(perm)
    orbit, frontier = {0}, [0]
    while frontier:
        vertex = frontier.pop()
        for perm in generators:
            image = perm[vertex]
            if image not in orbit:
                orbit.add(image)
                frontier.append(image)
    if len(orbit) != k:
        raise GraphError("Certificate does not act transitively on H")


def build_torus_product(
    h: nx.Graph,
    transitive_certificate: Optional[Iterable[Sequence[int]]] = None,
    n: int = 3,
) -> WeightedGraph:
    """
    Cartesian product H x Z/nZ.

    H's vertices are relabelled 0..|V(H)|-1 in sorted order (insertion order if
    unsortable). Cycle edges carry winding +1 from layer t to t+1 mod n, fiber
    edges carry 0. A certificate is a list of vertex permutations of the
    relabelled H; without one a TransitivityWarning is emitted.
    """
    if n < 3:
        raise GraphError(f"Cycle length must be at least 3, got {n}")
    if h.is_directed() or h.is_multigraph():
        raise GraphError("H must be a simple undirected graph")
    if h.number_of_nodes() == 0:
        raise GraphError("H must have at least one vertex")
    if nx.number_of_selfloops(h):
        raise GraphError("H must not contain self-loops")
    try:
        h = nx.convert_node_labels_to_integers(h, ordering="sorted")
    except TypeError:
        h = nx.convert_node_labels_to_integers(h)

    if transitive_certificate is None:
        warnings.warn(
            "No vertex-transitivity certificate supplied for H; the circumference "
            "variance bound assumes a vertex-transitive fiber",
            TransitivityWarning,
            stacklevel=2,
        )
        logger.log_warning("missing_transitivity_certificate", fiber_size=h.number_of_nodes())
    else:
        _check_certificate(h, transitive_certificate)

    k = h.number_of_nodes()
    layers = np.arange(n, dtype=np.int64)
    fiber = np.arange(k, dtype=np.int64)
    coords = np.stack([np.tile(fiber, n), np.repeat(layers, k)], axis=1)

    h_edges = np.array(list(h.edges), dtype=np.int64).reshape(-1, 2)
    fiber_edges = (h_edges[None, :, :] + (layers * k)[:, None, None]).reshape(-1, 2)
    low = (layers[:, None] * k + fiber[None, :]).reshape(-1)
    high = (((layers + 1) % n)[:, None] * k + fiber[None, :]).reshape(-1)
    cycle_edges = np.stack([low, high], axis=1)

    edges = np.concatenate([fiber_edges, cycle_edges])
    winding = np.concatenate([np.zeros(len(fiber_edges)), np.ones(len(cycle_edges))])
    degrees = dict(h.degree)
    return assemble_graph(
        GraphKind.TORUS_PRODUCT,
        coords,
        edges,
        winding,
        {
            "n": int(n),
            "fiber_size": int(k),
            "fiber_edges": [list(map(int, e)) for e in h_edges],
            "fiber_degrees": [int(degrees[v]) for v in range(k)],
            "certified": transitive_certificate is not None,
        },
    )


def square_torus(n: int) -> WeightedGraph:
    """(Z/nZ)^2 as the n-cycle times Z/nZ"""
    return build_torus_product(nx.cycle_graph(n), cycle_rotations(n), n)


def ladder_torus(n: int) -> WeightedGraph:
    """K2 x Z/nZ"""
    return build_torus_product(nx.complete_graph(2), [[1, 0]], n)


def pure_cycle(n: int) -> WeightedGraph:
    """Trivial H: the n-cycle itself"""
    h = nx.Graph()
    h.add_node(0)
    return build_torus_product(h, [[0]], n)


def window_sides(
    d: int, v_norm: int, a: float, b: float, shift: int = 0, margin: Optional[int] = None
) -> Tuple[List[int], int]:
    """Side lengths and margin of the box built by lattice_window"""
    if v_norm < 1:
        raise GraphError(f"|v| must be positive, got {v_norm}")
    if margin is None:
        margin = math.ceil((b / a - 1.0) * v_norm / 2.0) + 1
    if margin < 1 or shift < 0:
        raise GraphError(f"Invalid window: margin={margin}, shift={shift}")
    sides = [v_norm + shift + 2 * margin + 1] + [shift + 2 * margin + 1] * (d - 1)
    return sides, int(margin)


def lattice_window(
    d: int,
    v_norm: int,
    a: float,
    b: float,
    shift: int = 0,
    margin: Optional[int] = None,
) -> LatticeWindow:
    """
    Box holding every path of omega-length <= b|v| between z and z + |v| e_1 for
    any shift z in {0..shift}^d.

    Such a path only visits w with a(|w - z| + |w - z - v|) <= b|v|, so it stays
    within (b/a - 1)|v|/2 of the segment; the default margin clears that by one.
    """
    sides, margin = window_sides(d, v_norm, a, b, shift, margin)
    graph = build_box(d, sides)
    return LatticeWindow(graph=graph, origin=(margin,) * d, margin=margin)


# Serialization

def graph_to_json(graph: WeightedGraph) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": graph.kind.value,
        "params": graph.params,
        "vertex_count": graph.vertex_count,
        "coords": graph.coords.tolist(),
        "edges": graph.edges.tolist(),
        "winding": graph.winding.tolist(),
    }


def graph_from_json(document: Dict[str, Any]) -> WeightedGraph:
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise GraphError(f"Unsupported graph schema version: {version}")
    kind = GraphKind(document["kind"])
    graph = assemble_graph(
        kind, document["coords"], document["edges"], document["winding"], dict(document["params"])
    )
    if graph.vertex_count != document["vertex_count"]:
        raise GraphError("Vertex count does not match the coordinate table")
    if graph.edges.size and int(graph.edges.max()) >= graph.vertex_count:
        raise GraphError("Edge endpoint outside the vertex set")
    return graph


def graph_hash(graph: WeightedGraph) -> str:
    payload = json.dumps(graph_to_json(graph), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
