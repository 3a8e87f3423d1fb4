import asyncio
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..lattice.averaging import default_shift_scale, draw_shift
from ..lattice.circumference import circumference_length
from ..lattice.graphs import ladder_torus, lattice_window, pure_cycle, square_torus
from ..lattice.metric import discrete_derivative_fast, distance, geodesic, touches_boundary
from ..lattice.sampling import EnvironmentSampler
from ..models.errors import InvariantViolation
from ..models.experiment import ExperimentConfig, ExperimentKind, Job, JobResult, TorusFamily
from ..models.graph import LatticeWindow, WeightedGraph
from ..models.summary import EstimatorSummary
from ..utils.logger import ExperimentLogger

Kernel = Callable[[ExperimentConfig, str, int, str, int, int], JobResult]


@lru_cache(maxsize=16)
def cached_window(d: int, v_norm: int, a: float, b: float, shift: int, margin: Optional[int]) -> LatticeWindow:
    return lattice_window(d, v_norm, a, b, shift=shift, margin=margin)


@lru_cache(maxsize=16)
def cached_torus(family: TorusFamily, n: int) -> WeightedGraph:
    builders = {TorusFamily.SQUARE: square_torus, TorusFamily.CYCLE: pure_cycle, TorusFamily.LADDER: ladder_torus}
    return builders[family](n)


def shift_scale(config: ExperimentConfig, v_norm: int) -> int:
    return config.m or default_shift_scale(v_norm)


def window_for(config: ExperimentConfig, v_norm: int) -> LatticeWindow:
    """Influence maps leave room for the shift in both modes so edge ids line up"""
    shift = 0
    if config.kind is ExperimentKind.INFLUENCE_MAP and "shifted" in config.shift_modes:
        shift = shift_scale(config, v_norm)
    return cached_window(config.d, v_norm, config.a, config.b, shift, config.margin)


def axis_target(d: int, v_norm: int) -> Tuple[int, ...]:
    return (v_norm,) + (0,) * (d - 1)


def audit_edge_ids(window: LatticeWindow, v_norm: int, count: int) -> List[int]:
    """Edges along the straight segment from 0 to v, evenly spaced"""
    if count <= 0:
        return []
    d = window.graph.dimension
    steps = np.unique(np.linspace(0, v_norm - 1, num=min(count, v_norm)).round().astype(int))
    ids = []
    for k in steps:
        u = window.vertex((int(k),) + (0,) * (d - 1))
        w = window.vertex((int(k) + 1,) + (0,) * (d - 1))
        ids.append(window.graph.edge_id(u, w))
    return ids


# Kernels: module level so worker processes can import them

def _distance_kernel(config, job_id, v_norm, mode, start, stop, keep_histogram: bool) -> JobResult:
    window = window_for(config, v_norm)
    sampler = EnvironmentSampler(window.graph, config.a, config.b, config.seed)
    source = window.vertex((0,) * config.d)
    target = window.vertex(axis_target(config.d, v_norm))
    distances = EstimatorSummary.empty(keep_histogram)
    for index in range(start, stop):
        distances.add(distance(sampler.sample(index), source, target))
    distances.cover(start, stop)
    return JobResult(job_id=job_id, parameter=v_norm, mode=mode, summaries={"distance": distances})


def variance_kernel(config, job_id, v_norm, mode, start, stop) -> JobResult:
    return _distance_kernel(config, job_id, v_norm, mode, start, stop, keep_histogram=False)


def tail_kernel(config, job_id, v_norm, mode, start, stop) -> JobResult:
    return _distance_kernel(config, job_id, v_norm, mode, start, stop, keep_histogram=True)


def circumference_kernel(config, job_id, n, mode, start, stop) -> JobResult:
    torus = cached_torus(config.family, n)
    sampler = EnvironmentSampler(torus, config.a, config.b, config.seed)
    lengths, sizes = EstimatorSummary.empty(), EstimatorSummary.empty()
    for index in range(start, stop):
        value, path = circumference_length(sampler.sample(index), window=config.window)
        if path.winding != 1:
            raise InvariantViolation(f"Sample {index}: witness winds {path.winding} times, expected 1")
        lengths.add(value)
        sizes.add(len(path))
    for summary in (lengths, sizes):
        summary.cover(start, stop)
    return JobResult(
        job_id=job_id, parameter=n, mode=mode, summaries={"circumference": lengths, "witness_size": sizes}
    )


def midpoint_kernel(config, job_id, v_norm, mode, start, stop) -> JobResult:
    """Does the witness geodesic pass within L1 distance 1 of v/2"""
    window = window_for(config, v_norm)
    sampler = EnvironmentSampler(window.graph, config.a, config.b, config.seed)
    source = window.vertex((0,) * config.d)
    target = window.vertex(axis_target(config.d, v_norm))
    points = window.graph.coords - np.asarray(window.origin)
    offset = np.abs(points[:, 0] - v_norm / 2.0) + np.abs(points[:, 1:]).sum(axis=1)
    near_middle = offset <= 1.0
    hits, sizes = EstimatorSummary.empty(), EstimatorSummary.empty()
    touches = 0
    for index in range(start, stop):
        gamma = geodesic(sampler.sample(index), source, target)
        hits.add(1.0 if near_middle[list(gamma.vertices)].any() else 0.0)
        sizes.add(len(gamma))
        touches += touches_boundary(window, gamma.vertices)
    for summary in (hits, sizes):
        summary.cover(start, stop)
    return JobResult(
        job_id=job_id,
        parameter=v_norm,
        mode=mode,
        summaries={"hit": hits, "geodesic_size": sizes},
        counters={"boundary_touches": touches},
    )


def influence_kernel(config, job_id, v_norm, mode, start, stop) -> JobResult:
    """
    Per-edge witness membership, plain (endpoints 0 and v) or shifted
    (endpoints z and v + z). Shifted runs also record f on the same samples.
    """
    window = window_for(config, v_norm)
    graph = window.graph
    sampler = EnvironmentSampler(graph, config.a, config.b, config.seed)
    d = config.d
    m = shift_scale(config, v_norm)
    v = np.asarray(axis_target(d, v_norm))
    origin, far = window.vertex((0,) * d), window.vertex(v)
    audit = audit_edge_ids(window, v_norm, config.audit_edges)

    counts = np.zeros(graph.edge_count, dtype=np.int64)
    summaries = {"distance": EstimatorSummary.empty(), "geodesic_size": EstimatorSummary.empty()}
    if mode == "shifted":
        summaries["distance_unshifted"] = EstimatorSummary.empty()
        summaries["shift_gap"] = EstimatorSummary.empty()
    for e in audit:
        summaries[f"audit_{e}"] = EstimatorSummary.empty()
    touches = 0

    for index in range(start, stop):
        env = sampler.sample(index)
        z = np.zeros(d, dtype=np.int64)
        if mode == "shifted":
            z = np.asarray(draw_shift(sampler, index, d, m).z)
        u, w = window.vertex(z), window.vertex(z + v)
        gamma = geodesic(env, u, w)
        np.add.at(counts, list(gamma.edges), 1)
        touches += touches_boundary(window, gamma.vertices)
        summaries["distance"].add(gamma.length)
        summaries["geodesic_size"].add(len(gamma))
        if mode == "shifted":
            unshifted = distance(env, origin, far)
            summaries["distance_unshifted"].add(unshifted)
            summaries["shift_gap"].add(abs(gamma.length - unshifted))
        for e in audit:
            rho = discrete_derivative_fast(env, e, u, w, witness=gamma)
            summaries[f"audit_{e}"].add(1.0 if rho != 0.0 else 0.0)

    for summary in summaries.values():
        summary.cover(start, stop)
    nonzero = np.flatnonzero(counts)
    return JobResult(
        job_id=job_id,
        parameter=v_norm,
        mode=mode,
        summaries=summaries,
        edge_counts={int(e): int(counts[e]) for e in nonzero},
        counters={"boundary_touches": touches},
    )


class SampleExecutor:
    def __init__(self, workers: int = 1, chunk_size: int = 500):
        if workers < 1 or chunk_size < 1:
            raise ValueError(f"Invalid executor settings: workers={workers}, chunk_size={chunk_size}")
        self.workers = workers
        self.chunk_size = chunk_size
        self.logger = ExperimentLogger(component="sample_executor")
        # Register available experiment kernels
        self.kernels: Dict[ExperimentKind, Kernel] = {
            ExperimentKind.VARIANCE_SCAN: variance_kernel,
            ExperimentKind.CIRC_SCAN: circumference_kernel,
            ExperimentKind.TAIL: tail_kernel,
            ExperimentKind.MIDPOINT: midpoint_kernel,
            ExperimentKind.INFLUENCE_MAP: influence_kernel,
        }

    def chunks(self, start: int, stop: int) -> List[Tuple[int, int]]:
        return [(lo, min(lo + self.chunk_size, stop)) for lo in range(start, stop, self.chunk_size)]

    async def execute_job(self, config: ExperimentConfig, job: Job, start: int, stop: int) -> JobResult:
        """
        Run one job over sample indices [start, stop). Chunks go to a process
        pool when more than one worker is configured; results merge exactly, so
        the outcome does not depend on scheduling.
        """
        if job.kind not in self.kernels:
            raise ValueError(f"Unknown experiment kind: {job.kind.value}")
        kernel = self.kernels[job.kind]
        chunks = self.chunks(start, stop)

        if self.workers == 1:
            results = []
            for lo, hi in chunks:
                began = datetime.now()
                results.append(kernel(config, job.id, job.parameter, job.mode, lo, hi))
                self.logger.log_chunk(job.id, lo, hi, (datetime.now() - began).total_seconds() * 1000)
        else:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                futures = [
                    loop.run_in_executor(pool, kernel, config, job.id, job.parameter, job.mode, lo, hi)
                    for lo, hi in chunks
                ]
                results = await asyncio.gather(*futures)
            for lo, hi in chunks:
                self.logger.log_chunk(job.id, lo, hi, 0.0)

        merged = results[0]
        for result in results[1:]:
            merged = merged.merge(result)
        return merged

    def register_kernel(self, kind: ExperimentKind, kernel: Kernel):
        """Register a custom kernel; it must be importable by worker processes"""
        self.kernels[kind] = kernel
