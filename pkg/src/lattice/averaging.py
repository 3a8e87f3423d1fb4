"""
Random shift averaging of the point-to-point distance.

A d x m^2 block of fair bits x is mapped through the staircase g_m to a shift
z(x) in {0..m}^d, and f~(x, omega) = dist_omega(z, v + z). Every level of g_m
has probability O(1/m), which is what spreads the influence of a single edge.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from ..models.environment import Environment
from ..models.errors import GraphError
from ..models.graph import LatticeWindow
from ..models.paths import ShiftSample
from ..models.summary import EstimatorSummary
from ..utils.logger import ExperimentLogger
from .metric import discrete_derivative_fast, distance, geodesic, touches_boundary
from .sampling import EnvironmentSampler

# Largest m whose level distribution is summed exactly over C(m^2, j)
EXACT_LEVEL_LIMIT = 64

logger = ExperimentLogger(component="averaging")


@dataclass(frozen=True)
class StaircaseSpec:
    """Triangular wave k on {0..m^2}: up on [2sm, 2sm+m-1], down on the rest"""
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")

    @property
    def domain_bits(self) -> int:
        return self.m * self.m

    def k(self, j: int) -> int:
        return staircase_k(self.m, j)

    def table(self) -> np.ndarray:
        """k(0), ..., k(m^2)"""
        j = np.arange(self.domain_bits + 1)
        r = j % (2 * self.m)
        return np.where(r <= self.m, r, 2 * self.m - r)


def staircase_k(m: int, j: int) -> int:
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    if j < 0:
        raise ValueError(f"j must be non-negative, got {j}")
    r = j % (2 * m)
    return r if r <= m else 2 * m - r


def g_m(x, m: Optional[int] = None) -> int:
    """k applied to the Hamming weight of x; m is inferred from len(x) = m^2"""
    bits = np.asarray(x).reshape(-1)
    if m is None:
        m = math.isqrt(bits.size)
    if m < 1 or bits.size != m * m:
        raise ValueError(f"Expected m^2 = {m * m} bits, got {bits.size}")
    return staircase_k(m, int(np.count_nonzero(bits)))


def default_shift_scale(v_norm: int) -> int:
    """m = floor(|v|^(1/4)), computed in integers"""
    if v_norm < 1:
        raise ValueError(f"|v| must be positive, got {v_norm}")
    m = math.isqrt(math.isqrt(v_norm))
    while (m + 1) ** 4 <= v_norm:
        m += 1
    while m ** 4 > v_norm:
        m -= 1
    return max(m, 1)


@dataclass(frozen=True)
class LevelDistribution:
    m: int
    probabilities: np.ndarray
    exact: bool
    fractions: Optional[Tuple[Fraction, ...]] = None

    @property
    def max_probability(self) -> float:
        return float(self.probabilities.max())

    def within_bound(self, bound: Fraction) -> bool:
        """max_y P[g_m = y] <= bound, compared exactly when the distribution is exact"""
        if self.fractions is not None:
            return max(self.fractions) <= bound
        return bool(self.max_probability <= float(bound))


def exact_level_distribution(m: int) -> LevelDistribution:
    """
    P[g_m = y] for y = 0..m under uniform bits. Exact rational sums up to
    m = EXACT_LEVEL_LIMIT; beyond that a continuity-corrected normal
    approximation of the binomial weight, flagged as inexact.
    """
    spec = StaircaseSpec(m)
    n_bits = spec.domain_bits
    levels = spec.table()
    if m <= EXACT_LEVEL_LIMIT:
        denominator = 2 ** n_bits
        totals = [0] * (m + 1)
        for j in range(n_bits + 1):
            totals[int(levels[j])] += math.comb(n_bits, j)
        fractions = tuple(Fraction(t, denominator) for t in totals)
        return LevelDistribution(
            m=m,
            probabilities=np.array([float(f) for f in fractions]),
            exact=True,
            fractions=fractions,
        )

    logger.log_warning("level_distribution_normal_approximation", m=m)
    j = np.arange(n_bits + 1)
    scale = math.sqrt(n_bits) / 2.0
    weights = norm.cdf((j + 0.5 - n_bits / 2.0) / scale) - norm.cdf((j - 0.5 - n_bits / 2.0) / scale)
    probabilities = np.bincount(levels, weights=weights, minlength=m + 1)
    return LevelDistribution(m=m, probabilities=probabilities / probabilities.sum(), exact=False)


def shift_from_bits(x) -> ShiftSample:
    """z_i = g_m(row i of x)"""
    bits = np.asarray(x, dtype=np.uint8)
    if bits.ndim != 2:
        raise ValueError(f"Shift bits must be a d x m^2 matrix, got shape {bits.shape}")
    m = math.isqrt(bits.shape[1])
    z = tuple(g_m(row, m) for row in bits)
    return ShiftSample(x=bits, z=z)


def draw_shift(sampler: EnvironmentSampler, sample_index: int, d: int, m: int) -> ShiftSample:
    return shift_from_bits(sampler.shift_bits(sample_index, d, m * m))


def _endpoints(window: LatticeWindow, v: Sequence[int], z: Sequence[int]) -> Tuple[int, int]:
    z = np.asarray(z, dtype=np.int64)
    try:
        return window.vertex(z), window.vertex(z + np.asarray(v, dtype=np.int64))
    except GraphError as exc:
        raise GraphError(f"Shifted endpoints leave the window: {exc}") from exc


def shifted_distance(x, env: Environment, v: Sequence[int], window: LatticeWindow) -> float:
    """f~(x, omega) = dist_omega(z(x), v + z(x))"""
    if env.graph is not window.graph:
        raise GraphError("Environment was not sampled on the window graph")
    shift = shift_from_bits(x)
    u, w = _endpoints(window, v, shift.z)
    return distance(env, u, w)


def variance_transfer_bound(var_shifted: float, m: int, d: int, b: float) -> float:
    """Upper bound on var(f) given var(f~), from |f~ - f| <= 2mdb"""
    spread = 2.0 * m * d * b
    return var_shifted + 2.0 * spread * math.sqrt(max(var_shifted, 0.0)) + spread * spread


@dataclass
class InfluenceEstimate:
    """
    Per-sample indicators for one edge e: `influence` of sigma_e changing f~,
    `raised` of sigma_e increasing it, `on_geodesic` of e lying on the witness
    geodesic from z to v + z.
    """
    edge: int
    m: int
    influence: EstimatorSummary
    raised: EstimatorSummary
    on_geodesic: EstimatorSummary
    boundary_touches: int = 0

    def merge(self, other: "InfluenceEstimate") -> "InfluenceEstimate":
        if (self.edge, self.m) != (other.edge, other.m):
            raise ValueError("Cannot merge estimates for different edges or shift scales")
        return InfluenceEstimate(
            edge=self.edge,
            m=self.m,
            influence=self.influence.merge(other.influence),
            raised=self.raised.merge(other.raised),
            on_geodesic=self.on_geodesic.merge(other.on_geodesic),
            boundary_touches=self.boundary_touches + other.boundary_touches,
        )

    def surrogate_holds(self, sigmas: float = 4.0) -> bool:
        """I_e(f~) <= 2 P[e - z in gamma] up to `sigmas` standard errors"""
        slack = sigmas * (self.influence.std_error + 2.0 * self.on_geodesic.std_error)
        return self.influence.mean <= 2.0 * self.on_geodesic.mean + slack


def influence_estimate(
    e: int,
    v: Sequence[int],
    window: LatticeWindow,
    sampler: EnvironmentSampler,
    n_samples: int,
    m: Optional[int] = None,
    start_index: int = 0,
) -> InfluenceEstimate:
    """Monte Carlo estimate of I_e(f~) by exact toggling of e, one shift per sample"""
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if sampler.graph is not window.graph:
        raise GraphError("Sampler graph is not the window graph")
    e = window.graph.check_edge(e)
    d = window.graph.dimension
    if m is None:
        m = default_shift_scale(int(np.abs(np.asarray(v)).sum()))

    influence, raised, on_geodesic = (EstimatorSummary.empty() for _ in range(3))
    touches = 0
    for index in range(start_index, start_index + n_samples):
        env = sampler.sample(index)
        shift = draw_shift(sampler, index, d, m)
        u, w = _endpoints(window, v, shift.z)
        gamma = geodesic(env, u, w)
        touches += touches_boundary(window, gamma.vertices)
        rho = discrete_derivative_fast(env, e, u, w, witness=gamma)
        influence.add(1.0 if rho != 0.0 else 0.0)
        raised.add(1.0 if rho < 0.0 else 0.0)
        on_geodesic.add(1.0 if e in gamma else 0.0)
    for summary in (influence, raised, on_geodesic):
        summary.cover(start_index, start_index + n_samples)
    return InfluenceEstimate(
        edge=e, m=m, influence=influence, raised=raised, on_geodesic=on_geodesic, boundary_touches=touches
    )


def audit_staircase(
    m_values: Iterable[int], random_flips: int = 1000, seed: int = 0
) -> List[Dict[str, Any]]:
    """
    Range, per-coordinate Lipschitz constant and level concentration of g_m.
    Exhaustive over all inputs for m <= 3, random single-bit flips above.
    """
    rng = np.random.default_rng(seed)
    report = []
    for m in m_values:
        spec = StaircaseSpec(int(m))
        levels = spec.table()
        n_bits = spec.domain_bits
        if m <= 3:
            inputs = (np.arange(2 ** n_bits)[:, None] >> np.arange(n_bits)) & 1
            values = levels[inputs.sum(axis=1)]
            flipped = inputs[:, None, :] ^ np.eye(n_bits, dtype=inputs.dtype)[None, :, :]
            jumps = np.abs(levels[flipped.sum(axis=2)] - values[:, None])
            mode = "exhaustive"
        else:
            # g_m only sees the Hamming weight: draw it, then whether the flipped bit was set
            weights = rng.binomial(n_bits, 0.5, size=random_flips)
            was_set = rng.random(random_flips) < weights / n_bits
            values = levels[weights]
            jumps = np.abs(levels[np.where(was_set, weights - 1, weights + 1)] - values)
            mode = "random"
        distribution = exact_level_distribution(spec.m)
        report.append({
            "m": spec.m,
            "mode": mode,
            "range_ok": bool(values.min() >= 0 and values.max() <= spec.m),
            "lipschitz": int(jumps.max()),
            "max_level_probability": distribution.max_probability,
            "bound": 2.0 / spec.m,
            "within_bound": distribution.within_bound(Fraction(2, spec.m)),
            "exact": distribution.exact,
        })
    return report
