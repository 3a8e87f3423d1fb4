"""
Minimal omega-length of a circumference (closed path of projection degree 1)
in a torus product H x Z/nZ.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Tuple

import networkx as nx
import numpy as np

from ..models.environment import Environment
from ..models.errors import GraphError, InstanceTooLargeError
from ..models.graph import GraphKind, WeightedGraph, freeze
from ..models.paths import CircumferencePath
from ..models.summary import EstimatorSummary
from .graphs import assemble_graph, square_torus
from .metric import TOLERANCE, distances_from, length_tolerance, trace_back
from .sampling import EnvironmentSampler, toggle_edge

MAX_BRUTEFORCE_VERTICES = 16


@dataclass(frozen=True, eq=False)
class Unrolling:
    """The strip H x {-K, ..., n+K} covering the torus product"""
    torus: WeightedGraph
    window: int
    strip: WeightedGraph
    edge_map: np.ndarray
    vertex_map: np.ndarray

    def layer_vertex(self, h: int, t: int) -> int:
        return (t + self.window) * self.torus.fiber_size + h


def _require_torus(graph: WeightedGraph) -> None:
    if graph.kind is not GraphKind.TORUS_PRODUCT:
        raise GraphError(f"Circumference needs a torus product, got {graph.kind.value}")


def default_window(torus: WeightedGraph, a: float, b: float) -> int:
    """K = ceil(b n / a): a candidate of length <= b n has at most b n / a edges"""
    return int(math.ceil(b * torus.cycle_length / a))


@lru_cache(maxsize=32)
def unroll_torus(torus: WeightedGraph, window: int) -> Unrolling:
    _require_torus(torus)
    if window < 0:
        raise GraphError(f"Window must be non-negative, got {window}")
    n, k = torus.cycle_length, torus.fiber_size
    layers = np.arange(-window, n + window + 1, dtype=np.int64)
    depth = len(layers)
    fiber = np.arange(k, dtype=np.int64)
    coords = np.stack([np.tile(fiber, depth), np.repeat(layers, k)], axis=1)

    h_edges = np.array(torus.params["fiber_edges"], dtype=np.int64).reshape(-1, 2)
    rows = np.arange(depth, dtype=np.int64) * k
    fiber_edges = (h_edges[None, :, :] + rows[:, None, None]).reshape(-1, 2)
    low = (rows[:-1, None] + fiber[None, :]).reshape(-1)
    cycle_edges = np.stack([low, low + k], axis=1)
    edges = np.concatenate([fiber_edges, cycle_edges])
    winding = np.concatenate([np.zeros(len(fiber_edges)), np.ones(len(cycle_edges))])
    strip = assemble_graph(GraphKind.STRIP, coords, edges, winding, {"n": n, "fiber_size": k})

    # strip vertex (h, t) covers torus vertex (h, t mod n)
    vertex_map = (np.mod(strip.coords[:, 1], n) * k + strip.coords[:, 0]).astype(np.int64)
    ends = np.sort(vertex_map[strip.edges], axis=1)
    keys = ends[:, 0] * torus.vertex_count + ends[:, 1]
    torus_keys = torus.edges[:, 0].astype(np.int64) * torus.vertex_count + torus.edges[:, 1]
    edge_map = np.searchsorted(torus_keys, keys)
    if np.any(torus_keys[edge_map] != keys):
        raise GraphError("Strip edge without a torus counterpart")
    return Unrolling(
        torus=torus, window=window, strip=strip, edge_map=freeze(edge_map), vertex_map=freeze(vertex_map)
    )


def circumference_length(
    env: Environment, torus: Optional[WeightedGraph] = None, window: Optional[int] = None
) -> Tuple[float, CircumferencePath]:
    """
    c_G(omega) with a witness path.

    Every circumference visits layer 0, so lifting it from some (h, 0) gives a
    strip path ending at (h, n). Dijkstra runs from all (h, 0) at once; the
    smallest h attaining the minimum supplies the witness.
    """
    torus = torus or env.graph
    _require_torus(torus)
    if env.graph is not torus:
        raise GraphError("Environment was not sampled on this torus product")
    n, k = torus.cycle_length, torus.fiber_size
    if window is None:
        window = default_window(torus, env.a, env.b)
    unrolled = unroll_torus(torus, int(window))
    weights = env.weights[unrolled.edge_map]

    sources = np.array([unrolled.layer_vertex(h, 0) for h in range(k)])
    targets = np.array([unrolled.layer_vertex(h, n) for h in range(k)])
    dist = distances_from(unrolled.strip, weights, sources, limit=env.b * n + TOLERANCE)
    dist = dist.reshape(k, -1)
    lengths = dist[np.arange(k), targets]
    best = float(lengths.min())
    start = int(np.flatnonzero(lengths <= best + length_tolerance(env.a))[0])

    strip_edges, strip_vertices = trace_back(
        unrolled.strip, weights, dist[start], int(sources[start]), int(targets[start])
    )
    layer = unrolled.strip.coords[:, 1]
    displacement = int(layer[strip_vertices[-1]] - layer[strip_vertices[0]])
    edges = tuple(int(e) for e in unrolled.edge_map[strip_edges])
    path = CircumferencePath(
        edges=edges,
        vertices=tuple(int(v) for v in unrolled.vertex_map[strip_vertices]),
        displacement=displacement,
        winding=displacement // n,
        length=env.path_length(edges),
        fiber_start=start,
    )
    return best, path


@lru_cache(maxsize=8)
def degree_one_cycles(torus: WeightedGraph) -> np.ndarray:
    """Incidence matrix (cycles x edges) of the simple cycles with net displacement +-n"""
    _require_torus(torus)
    if torus.vertex_count > MAX_BRUTEFORCE_VERTICES:
        raise InstanceTooLargeError(
            f"Exhaustive enumeration is limited to {MAX_BRUTEFORCE_VERTICES} vertices, "
            f"got {torus.vertex_count}"
        )
    n = torus.cycle_length
    graph = nx.Graph()
    for e, (u, v) in enumerate(torus.edges):
        graph.add_edge(int(u), int(v), id=e)

    rows = []
    for cycle in nx.simple_cycles(graph):
        displacement = 0
        row = np.zeros(torus.edge_count, dtype=np.uint8)
        for i, u in enumerate(cycle):
            e = graph.edges[u, cycle[(i + 1) % len(cycle)]]["id"]
            displacement += torus.step(e, u)
            row[e] = 1
        if abs(displacement) == n:
            rows.append(row)
    return freeze(np.array(rows, dtype=np.uint8).reshape(-1, torus.edge_count))


def circumference_bruteforce(env: Environment, torus: Optional[WeightedGraph] = None) -> float:
    """Minimum over simple cycles whose net displacement along Z/nZ is +-n"""
    torus = torus or env.graph
    cycles = degree_one_cycles(torus)
    if cycles.shape[0] == 0:
        return math.inf
    return float((cycles @ env.weights).min())


def circumference_derivative(env: Environment, e: int, torus: Optional[WeightedGraph] = None) -> float:
    e = env.graph.check_edge(e)
    before, _ = circumference_length(env, torus)
    after, _ = circumference_length(toggle_edge(env, e), torus)
    return (before - after) / 2.0


def square_torus_orbits(torus: WeightedGraph) -> Dict[str, np.ndarray]:
    """
    Edge orbits of (Z/nZ)^2 under the symmetries that keep the cycle factor:
    translations and reflections of both factors.
    """
    _require_torus(torus)
    expected = square_torus(torus.cycle_length)
    if not (np.array_equal(torus.edges, expected.edges) and np.array_equal(torus.coords, expected.coords)):
        raise GraphError("Edge orbits are only known for the square torus (Z/nZ)^2")
    fiber = np.flatnonzero(torus.winding == 0)
    cycle = np.flatnonzero(torus.winding != 0)
    return {"fiber": fiber, "cycle": cycle}


@dataclass
class CircumferenceInfluenceProfile:
    """Per-edge Monte Carlo statistics of rho_e c_G and of the witness beta"""
    samples: int
    negative: np.ndarray
    positive: np.ndarray
    on_witness: np.ndarray
    square_sum: np.ndarray
    abs_sum: np.ndarray
    witness_size: EstimatorSummary
    length: EstimatorSummary

    @property
    def negative_probability(self) -> np.ndarray:
        return self.negative / self.samples

    @property
    def nonzero_probability(self) -> np.ndarray:
        return (self.negative + self.positive) / self.samples

    @property
    def l2_squared(self) -> np.ndarray:
        return self.square_sum / self.samples

    @property
    def l1(self) -> np.ndarray:
        return self.abs_sum / self.samples

    def chain_checks(self, a: float, b: float, n: int) -> Dict[str, bool]:
        """
        Inequalities of the circumference argument, evaluated on the empirical
        measure, where each holds exactly.
        """
        tol = 1e-9
        mean_beta = self.witness_size.mean
        return {
            "negative_sum_le_mean_witness": bool(self.negative_probability.sum() <= mean_beta + tol),
            "mean_witness_le_bn_over_a": bool(mean_beta <= b * n / a + tol),
            "l2_le_jump_times_nonzero": bool(
                np.all(self.l2_squared <= (b - a) ** 2 / 4 * self.nonzero_probability + tol)
            ),
            "cauchy_schwarz_l1": bool(
                np.all(self.l1 <= np.sqrt(self.nonzero_probability * self.l2_squared) + tol)
            ),
        }


def circumference_influence_profile(
    sampler: EnvironmentSampler, n_samples: int, start_index: int = 0
) -> CircumferenceInfluenceProfile:
    """
    For every sample and edge, rho_e c_G by toggling. An a-edge off beta can be
    skipped: raising it leaves beta intact and lengths only grow.
    """
    torus = sampler.graph
    _require_torus(torus)
    count = torus.edge_count
    negative = np.zeros(count, dtype=np.int64)
    positive = np.zeros(count, dtype=np.int64)
    on_witness = np.zeros(count, dtype=np.int64)
    square_sum = np.zeros(count)
    abs_sum = np.zeros(count)
    witness_size = EstimatorSummary.empty()
    lengths = EstimatorSummary.empty()

    for index in range(start_index, start_index + n_samples):
        env = sampler.sample(index)
        value, beta = circumference_length(env)
        witness = set(beta.edges)
        on_witness[list(witness)] += 1
        witness_size.add(len(beta))
        lengths.add(value)
        for e in range(count):
            if env.bits[e] == 0 and e not in witness:
                continue
            flipped, _ = circumference_length(toggle_edge(env, e))
            rho = (value - flipped) / 2.0
            if rho < -TOLERANCE:
                negative[e] += 1
            elif rho > TOLERANCE:
                positive[e] += 1
            square_sum[e] += rho * rho
            abs_sum[e] += abs(rho)
    witness_size.cover(start_index, start_index + n_samples)
    lengths.cover(start_index, start_index + n_samples)
    return CircumferenceInfluenceProfile(
        samples=n_samples,
        negative=negative,
        positive=positive,
        on_witness=on_witness,
        square_sum=square_sum,
        abs_sum=abs_sum,
        witness_size=witness_size,
        length=lengths,
    )
