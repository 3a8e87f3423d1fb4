from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .errors import WeightError, GraphError
from .graph import WeightedGraph, freeze


def check_weights(a: float, b: float) -> Tuple[float, float]:
    a, b = float(a), float(b)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise WeightError(f"Edge lengths must be finite, got a={a}, b={b}")
    if a <= 0:
        raise WeightError(f"Edge length a must be positive, got {a}")
    if a >= b:
        raise WeightError(f"Edge lengths must satisfy a < b, got a={a}, b={b}")
    return a, b


@dataclass(frozen=True, eq=False)
class Environment:
    """
    One realization omega of the two-point edge lengths.

    bit 0 means length a, bit 1 means length b. Sampled environments carry
    (seed, sample_index) and the set of edges toggled since sampling, which is
    enough to regenerate the bits; hand-built environments carry no seed.
    """
    graph: WeightedGraph
    a: float
    b: float
    bits: np.ndarray
    seed: Optional[int] = None
    sample_index: Optional[int] = None
    toggled: Tuple[int, ...] = ()

    def __post_init__(self):
        check_weights(self.a, self.b)
        if self.bits.shape != (self.graph.edge_count,):
            raise GraphError(
                f"Expected {self.graph.edge_count} edge bits, got shape {self.bits.shape}"
            )

    @classmethod
    def from_bits(cls, graph: WeightedGraph, a: float, b: float, bits) -> "Environment":
        array = np.array(bits, dtype=np.uint8).reshape(-1)
        if np.any(array > 1):
            raise GraphError("Environment bits must be 0 or 1")
        return cls(graph=graph, a=float(a), b=float(b), bits=freeze(array))

    @classmethod
    def constant(cls, graph: WeightedGraph, a: float, b: float, bit: int = 0) -> "Environment":
        return cls.from_bits(graph, a, b, np.full(graph.edge_count, bit, dtype=np.uint8))

    @classmethod
    def from_mask(cls, graph: WeightedGraph, a: float, b: float, mask: int) -> "Environment":
        """Environment whose bit e is bit e of the integer `mask`"""
        bits = [(int(mask) >> e) & 1 for e in range(graph.edge_count)]
        return cls.from_bits(graph, a, b, bits)

    @cached_property
    def weights(self) -> np.ndarray:
        return freeze(np.where(self.bits == 1, self.b, self.a).astype(np.float64))

    def weight(self, edge: int) -> float:
        return float(self.weights[self.graph.check_edge(edge)])

    def path_length(self, edges) -> float:
        ids = np.asarray(list(edges), dtype=np.int64)
        return float(self.weights[ids].sum()) if ids.size else 0.0
