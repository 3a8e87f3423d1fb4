"""
Fourier-Walsh analysis of real functions on {0,1}^J.

Tables are indexed by bit masks: bit j of the index is omega_j. Characters are
u_S(omega) = (-1)^(S . omega), so f = sum_S f^(S) u_S with
f^(S) = 2^-|J| sum_omega f(omega) u_S(omega).
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence

import numpy as np
from scipy import integrate

MAX_DIMENSION = 24
# The explicit Talagrand form carries this constant
TALAGRAND_CONSTANT = 3.0
# Exponent 1 + p^2 integrated over p in [0, 1] produces this power of r
HOLDER_EXPONENT = 6.0 / 5.0
QUAD_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class BooleanFunctionTable:
    j_count: int
    values: np.ndarray

    def __post_init__(self):
        if not 0 <= self.j_count <= MAX_DIMENSION:
            raise ValueError(f"|J| must lie in 0..{MAX_DIMENSION}, got {self.j_count}")
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size != 1 << self.j_count:
            raise ValueError(f"Expected {1 << self.j_count} values for |J| = {self.j_count}, got {values.size}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.values.size

    def check_coordinate(self, j: int) -> int:
        if not 0 <= int(j) < self.j_count:
            raise ValueError(f"Coordinate {j} outside 0..{self.j_count - 1}")
        return int(j)


@dataclass(frozen=True, eq=False)
class WalshSpectrum:
    """Coefficients f^(S), indexed like the table"""
    j_count: int
    coefficients: np.ndarray

    def set_sizes(self) -> np.ndarray:
        return subset_sizes(self.j_count)


@lru_cache(maxsize=8)
def subset_sizes(j_count: int) -> np.ndarray:
    """|S| for every mask S in 0..2^J - 1"""
    index = np.arange(1 << j_count, dtype=np.int64)
    sizes = np.zeros(1 << j_count, dtype=np.int64)
    for j in range(j_count):
        sizes += (index >> j) & 1
    sizes.flags.writeable = False
    return sizes


def _hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard butterfly, |J| passes over 2^|J| entries"""
    a = np.array(values, dtype=np.float64)
    h = 1
    while h < a.size:
        pairs = a.reshape(-1, 2, h)
        a = np.stack([pairs[:, 0] + pairs[:, 1], pairs[:, 0] - pairs[:, 1]], axis=1).reshape(-1)
        h *= 2
    return a


# Constructors

def constant_table(j_count: int, c: float = 1.0) -> BooleanFunctionTable:
    return BooleanFunctionTable(j_count, np.full(1 << j_count, float(c)))


def character_table(j_count: int, s_mask: int) -> BooleanFunctionTable:
    index = np.arange(1 << j_count, dtype=np.int64)
    parity = subset_sizes(j_count)[index & int(s_mask)] & 1
    return BooleanFunctionTable(j_count, 1.0 - 2.0 * parity)


def dictator_table(j_count: int, j: int) -> BooleanFunctionTable:
    """f(omega) = omega_j"""
    if not 0 <= j < j_count:
        raise ValueError(f"Coordinate {j} outside 0..{j_count - 1}")
    index = np.arange(1 << j_count, dtype=np.int64)
    return BooleanFunctionTable(j_count, ((index >> j) & 1).astype(np.float64))


def point_indicator_table(j_count: int, point: int) -> BooleanFunctionTable:
    values = np.zeros(1 << j_count)
    values[int(point)] = 1.0
    return BooleanFunctionTable(j_count, values)


def random_table(j_count: int, seed: int, index: int = 0) -> BooleanFunctionTable:
    """Uniform[-1, 1] values keyed by (seed, index)"""
    rng = np.random.default_rng([int(seed), int(index)])
    return BooleanFunctionTable(j_count, rng.uniform(-1.0, 1.0, size=1 << j_count))


# Transforms and operators

def walsh_transform(t: BooleanFunctionTable) -> WalshSpectrum:
    return WalshSpectrum(t.j_count, _hadamard(t.values) / t.size)


def inverse_walsh_transform(spectrum: WalshSpectrum) -> BooleanFunctionTable:
    return BooleanFunctionTable(spectrum.j_count, _hadamard(spectrum.coefficients))


def naive_walsh_transform(t: BooleanFunctionTable) -> WalshSpectrum:
    """O(4^|J|) reference summation"""
    index = np.arange(t.size, dtype=np.int64)
    parity = subset_sizes(t.j_count)[index[:, None] & index[None, :]] & 1
    return WalshSpectrum(t.j_count, (1.0 - 2.0 * parity) @ t.values / t.size)


def rho_j(t: BooleanFunctionTable, j: int) -> BooleanFunctionTable:
    """(f(omega) - f(sigma_j omega)) / 2"""
    j = t.check_coordinate(j)
    index = np.arange(t.size, dtype=np.int64)
    return BooleanFunctionTable(t.j_count, (t.values - t.values[index ^ (1 << j)]) / 2.0)


def noise_operator(t: BooleanFunctionTable, p: float) -> BooleanFunctionTable:
    """T_p f = sum_S p^|S| f^(S) u_S"""
    if not -1.0 <= p <= 1.0:
        raise ValueError(f"Noise parameter must lie in [-1, 1], got {p}")
    spectrum = walsh_transform(t)
    scaled = spectrum.coefficients * np.power(float(p), spectrum.set_sizes())
    return inverse_walsh_transform(WalshSpectrum(t.j_count, scaled))


def p_norm(t: BooleanFunctionTable, p: float) -> float:
    """(E|f|^p)^(1/p) under the uniform measure; p = inf gives the sup norm"""
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p}")
    return _norm(t.values, p)


def _norm(values: np.ndarray, p: float) -> float:
    scale = float(np.abs(values).max()) if values.size else 0.0
    if scale == 0.0:
        return 0.0
    if math.isinf(p):
        return scale
    return scale * float(np.mean((np.abs(values) / scale) ** p)) ** (1.0 / p)


def variance(t: BooleanFunctionTable) -> float:
    return float(np.mean(t.values ** 2) - np.mean(t.values) ** 2)


def spectral_variance(t: BooleanFunctionTable) -> float:
    """Parseval tail sum_{S != 0} f^(S)^2"""
    return float(np.sum(walsh_transform(t).coefficients[1:] ** 2))


def influences(t: BooleanFunctionTable) -> np.ndarray:
    """I_j = P[f != sigma_j f]"""
    return np.array([np.count_nonzero(rho_j(t, j).values) / t.size for j in range(t.j_count)])


def total_influence(t: BooleanFunctionTable) -> float:
    """sum_j ||rho_j f||_2^2 = sum_S |S| f^(S)^2"""
    spectrum = walsh_transform(t)
    return float(np.sum(spectrum.set_sizes() * spectrum.coefficients ** 2))


# Inequalities

@dataclass(frozen=True)
class BonamiBecknerReport:
    p_grid: List[float]
    slacks: List[float]

    @property
    def min_slack(self) -> float:
        return min(self.slacks) if self.slacks else math.inf

    @property
    def holds(self) -> bool:
        return self.min_slack >= -1e-9


def check_bonami_beckner(t: BooleanFunctionTable, p_grid: Sequence[float]) -> BonamiBecknerReport:
    """Signed slack ||f||_{1+p^2} - ||T_p f||_2 for each p"""
    slacks = []
    for p in p_grid:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Grid point {p} outside [0, 1]")
        slacks.append(_norm(t.values, 1.0 + p * p) - _norm(noise_operator(t, p).values, 2.0))
    return BonamiBecknerReport(p_grid=[float(p) for p in p_grid], slacks=slacks)


def _holder_factor(r: float) -> float:
    """(1 - r^c) / log(1/r) with its limit c at r = 1"""
    c = HOLDER_EXPONENT
    r = min(r, 1.0)
    log_inverse = -math.log(r)
    if log_inverse < 1e-6:
        return c - c * c * log_inverse / 2.0 + c ** 3 * log_inverse ** 2 / 6.0
    return (1.0 - r ** c) / log_inverse


def _derivative_norms(t: BooleanFunctionTable):
    for j in range(t.j_count):
        fj = rho_j(t, j).values
        yield fj, _norm(fj, 2.0), _norm(fj, 1.0)


def talagrand_rhs(t: BooleanFunctionTable) -> float:
    """3 sum_j ||f_j||_2^2 (1 - r_j^(6/5)) / log(1/r_j), r_j = ||f_j||_1 / ||f_j||_2"""
    total = 0.0
    for _, l2, l1 in _derivative_norms(t):
        if l2 == 0.0:
            continue
        total += TALAGRAND_CONSTANT * l2 * l2 * _holder_factor(l1 / l2)
    return total


def fin_bound(t: BooleanFunctionTable) -> float:
    """3 sum_j int_0^1 ||f_j||_{1+p^2}^2 dp by adaptive quadrature"""
    total = 0.0
    for fj, l2, _ in _derivative_norms(t):
        if l2 == 0.0:
            continue
        value, _ = integrate.quad(lambda p: _norm(fj, 1.0 + p * p) ** 2, 0.0, 1.0, epsrel=QUAD_TOLERANCE)
        total += value
    return TALAGRAND_CONSTANT * total


@dataclass(frozen=True)
class NoiseEnergy:
    quadrature: float
    closed_form: float

    @property
    def relative_error(self) -> float:
        scale = max(abs(self.closed_form), 1e-300)
        return abs(self.quadrature - self.closed_form) / scale


def noise_energy_integral(t: BooleanFunctionTable) -> NoiseEnergy:
    """
    sum_j int_0^1 ||T_p f_j||_2^2 dp, once by quadrature over the spectra of
    the tables f_j and once as sum_S |S| f^(S)^2 / (2|S| + 1).
    """
    sizes = subset_sizes(t.j_count)
    spectrum = walsh_transform(t)
    closed = float(np.sum(sizes * spectrum.coefficients ** 2 / (2 * sizes + 1)))

    energies = np.zeros(t.j_count + 1)
    for j in range(t.j_count):
        coefficients = walsh_transform(rho_j(t, j)).coefficients
        energies += np.bincount(sizes, weights=coefficients ** 2, minlength=t.j_count + 1)
    levels = np.arange(t.j_count + 1)
    value, _ = integrate.quad(
        lambda p: float(np.sum(energies * p ** (2 * levels))), 0.0, 1.0, epsrel=QUAD_TOLERANCE
    )
    return NoiseEnergy(quadrature=value, closed_form=closed)


def holder_slack(t: BooleanFunctionTable, p_grid: Sequence[float]) -> float:
    """min over j, p of ||f_j||_2^(2p^2) ||f_j||_1^(1-p^2) - E|f_j|^(1+p^2)"""
    worst = math.inf
    for fj, l2, l1 in _derivative_norms(t):
        if l2 == 0.0:
            continue
        for p in p_grid:
            q = p * p
            moment = float(np.mean(np.abs(fj) ** (1.0 + q)))
            worst = min(worst, l2 ** (2 * q) * l1 ** (1.0 - q) - moment)
    return worst


def talagrand_classic_ratio(t: BooleanFunctionTable) -> float:
    """var(f) / sum_j ||f_j||_2^2 / (1 + log(||f_j||_2 / ||f_j||_1)); 0 for constants"""
    denominator = 0.0
    for _, l2, l1 in _derivative_norms(t):
        if l2 == 0.0:
            continue
        denominator += l2 * l2 / (1.0 + math.log(l2 / l1))
    if denominator == 0.0:
        return 0.0
    return variance(t) / denominator
