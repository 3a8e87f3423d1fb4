"""Counter-based sampling of two-point edge environments."""
from typing import Any, Dict

import numpy as np

from ..models.environment import Environment, check_weights
from ..models.errors import GraphError
from ..models.graph import WeightedGraph, freeze
from .graphs import graph_hash

MASK64 = (1 << 64) - 1

# Third Philox counter word; keeps edge bits and shift bits on disjoint streams
EDGE_STREAM = 0
SHIFT_STREAM = 1


def _check_key(seed: int, sample_index: int) -> None:
    if not 0 <= int(seed) <= MASK64:
        raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
    if not 0 <= int(sample_index) <= MASK64:
        raise ValueError(f"Sample index must be a 64-bit unsigned integer, got {sample_index}")


def counter_bits(seed: int, sample_index: int, count: int, stream: int = EDGE_STREAM) -> np.ndarray:
    """
    `count` fair bits keyed by (seed, sample_index, stream).

    Bit i is bit (i mod 64) of the (i // 64)-th raw Philox output, so each
    position depends only on the key and its own counter block.
    """
    _check_key(seed, sample_index)
    key = int(seed) | (int(sample_index) << 64)
    generator = np.random.Philox(key=key, counter=[0, 0, stream, 0])
    words = generator.random_raw((count + 63) // 64)
    raw = np.asarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:count]


def sample_environment(g: WeightedGraph, a: float, b: float, seed: int, sample_index: int) -> Environment:
    a, b = check_weights(a, b)
    bits = counter_bits(seed, sample_index, g.edge_count, EDGE_STREAM)
    return Environment(
        graph=g, a=a, b=b, bits=freeze(bits), seed=int(seed), sample_index=int(sample_index)
    )


def toggle_edge(env: Environment, e: int) -> Environment:
    """sigma_e omega; the input environment is left untouched"""
    e = env.graph.check_edge(e)
    bits = env.bits.copy()
    bits[e] ^= 1
    toggled = tuple(sorted(set(env.toggled) ^ {e}))
    return Environment(
        graph=env.graph,
        a=env.a,
        b=env.b,
        bits=freeze(bits),
        seed=env.seed,
        sample_index=env.sample_index,
        toggled=toggled,
    )


class EnvironmentSampler:
    """Reproducible source of environments and shift bits for one graph"""

    def __init__(self, graph: WeightedGraph, a: float, b: float, seed: int):
        self.graph = graph
        self.a, self.b = check_weights(a, b)
        _check_key(seed, 0)
        self.seed = int(seed)

    def sample(self, sample_index: int) -> Environment:
        return sample_environment(self.graph, self.a, self.b, self.seed, sample_index)

    def shift_bits(self, sample_index: int, rows: int, cols: int) -> np.ndarray:
        bits = counter_bits(self.seed, sample_index, rows * cols, SHIFT_STREAM)
        return bits.reshape(rows, cols)


def environment_record(env: Environment) -> Dict[str, Any]:
    """Provenance record; bits are regenerated, never stored"""
    if env.seed is None:
        raise ValueError("Hand-built environments carry no seed and cannot be serialized")
    return {
        "graph_hash": graph_hash(env.graph),
        "a": env.a,
        "b": env.b,
        "seed": env.seed,
        "sample_index": env.sample_index,
        "toggled": list(env.toggled),
    }


def environment_from_record(record: Dict[str, Any], graph: WeightedGraph) -> Environment:
    if record["graph_hash"] != graph_hash(graph):
        raise GraphError("Environment record refers to a different graph")
    env = sample_environment(graph, record["a"], record["b"], record["seed"], record["sample_index"])
    for e in record.get("toggled", []):
        env = toggle_edge(env, e)
    return env
