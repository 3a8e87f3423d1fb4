from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class Geodesic:
    """Ordered edge list realizing dist_omega(source, target); `vertices` has one more entry"""
    source: int
    target: int
    edges: Tuple[int, ...]
    vertices: Tuple[int, ...]
    length: float

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, edge: int) -> bool:
        return edge in self.edge_set

    @property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)


@dataclass(frozen=True)
class CircumferencePath:
    """
    Closed path in H x Z/nZ. `winding` is the projection degree, i.e. the net
    displacement along the cycle factor divided by n.
    """
    edges: Tuple[int, ...]
    vertices: Tuple[int, ...]
    displacement: int
    winding: int
    length: float
    fiber_start: int = 0

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, edge: int) -> bool:
        return edge in set(self.edges)


@dataclass(frozen=True)
class ShiftSample:
    """Shift bits x (d rows of m^2 bits) and the lattice shift z(x)"""
    x: np.ndarray
    z: Tuple[int, ...]

    @property
    def m(self) -> int:
        return int(round(np.sqrt(self.x.shape[1])))
