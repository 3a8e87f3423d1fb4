"""
Turn merged job results into CSV rows and run notes.

Rows and notes are pure functions of (config, results): a merged set of shards
renders exactly like an unsharded run.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
from scipy.stats import linregress

from ..lattice.averaging import variance_transfer_bound
from ..models.experiment import ExperimentConfig, ExperimentKind, JobResult
from ..models.summary import Z95, EstimatorSummary
from .sample_executor import cached_torus, shift_scale, window_for

Row = List[Any]


@dataclass
class Artifact:
    config: ExperimentConfig
    results: List[JobResult]
    columns: List[str]
    rows: List[Row]
    notes: Dict[str, Any] = field(default_factory=dict)


def binomial_half_width(p: float, n: int) -> float:
    return Z95 * math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else float("nan")


def _by_parameter(results: List[JobResult]) -> List[JobResult]:
    return sorted(results, key=lambda r: (r.parameter, r.mode))


# Variance scan

VARIANCE_COLUMNS = [
    "v_norm", "samples", "mean", "variance", "variance_half_width", "ratio", "envelope", "above_envelope",
]


def variance_rows(config: ExperimentConfig, results: List[JobResult]) -> Tuple[List[Row], Dict[str, Any]]:
    rows, ratios = [], []
    for result in _by_parameter(results):
        v_norm, summary = result.parameter, result.summaries["distance"]
        ratio = summary.variance * math.log(v_norm) / v_norm
        envelope = (config.b - config.a) ** 2 * (config.b / config.a) * v_norm / 4.0
        above = summary.variance - 4.0 * summary.variance_std_error > envelope
        ratios.append(ratio)
        rows.append([
            v_norm, summary.count, summary.mean, summary.variance, summary.variance_half_width,
            ratio, envelope, above,
        ])
    pairs = list(zip(ratios, ratios[1:]))
    cap = 3.0 * ratios[0] if ratios else None
    notes = {
        "ratio_cap": cap,
        "within_cap": bool(all(r <= cap for r in ratios)) if ratios else True,
        "non_increasing_pairs": sum(1 for x, y in pairs if y <= x),
        "pairs": len(pairs),
        "above_envelope": sum(1 for row in rows if row[-1]),
    }
    return rows, notes


# Circumference scan

CIRCUMFERENCE_COLUMNS = [
    "family", "n", "fiber_size", "samples", "mean", "variance", "variance_half_width",
    "log_ratio", "normalized_ratio", "mean_witness_size",
]


def circumference_rows(config, results) -> Tuple[List[Row], Dict[str, Any]]:
    a, b = config.a, config.b
    rows, closed_forms = [], []
    for result in _by_parameter(results):
        n = result.parameter
        k = cached_torus(config.family, n).fiber_size
        summary = result.summaries["circumference"]
        log_term = math.log(a * k / b)
        rows.append([
            config.family.value, n, k, summary.count, summary.mean, summary.variance,
            summary.variance_half_width,
            summary.variance * log_term / n,
            summary.variance * (1.0 + log_term) / ((b / a) * (b - a) ** 2 * n),
            result.summaries["witness_size"].mean,
        ])
        if k == 1:
            # c_G is the sum of n independent two-point lengths
            expected = n * (b - a) ** 2 / 4.0
            sigma = summary.variance_std_error
            closed_forms.append({
                "n": n,
                "expected_variance": expected,
                "within_4_sigma": bool(abs(summary.variance - expected) <= 4.0 * sigma),
            })
    notes: Dict[str, Any] = {"window": config.window}
    if closed_forms:
        notes["closed_form"] = closed_forms
    return rows, notes


# Tail

TAIL_COLUMNS = ["v_norm", "t", "samples", "exceedance", "half_width"]


def quantile_ladder(summary: EstimatorSummary, v_norm: int, depth: int) -> List[Dict[str, float]]:
    """s(2^-k) - s(1/2) against sqrt(k |v|)"""
    base = summary.upper_quantile(0.5)
    ladder = []
    for k in range(1, depth + 1):
        gap = summary.upper_quantile(2.0 ** -k) - base
        scale = math.sqrt(k * v_norm)
        ladder.append({"k": k, "gap": gap, "scale": scale, "ratio": gap / scale})
    return ladder


def fit_sub_gaussian(t_values, probabilities) -> Dict[str, Any]:
    """Least squares of log P against t^2 over the observable range"""
    t = np.asarray(t_values, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    keep = (t > 0) & (p > 0)
    if np.unique(t[keep]).size < 2:
        return {"slope": None, "intercept": None, "r2": None, "constant": None}
    fit = linregress(t[keep] ** 2, np.log(p[keep]))
    return {
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "r2": float(fit.rvalue ** 2),
        "constant": float(-1.0 / fit.slope) if fit.slope < 0 else None,
    }


def tail_rows(config, results) -> Tuple[List[Row], Dict[str, Any]]:
    rows, notes = [], {}
    for result in _by_parameter(results):
        v_norm, summary = result.parameter, result.summaries["distance"]
        median = summary.median
        scale = math.sqrt(v_norm)
        curve = [summary.exceedance(median, t * scale) for t in config.t_grid]
        for t, p in zip(config.t_grid, curve):
            rows.append([v_norm, t, summary.count, p, binomial_half_width(p, summary.count)])
        notes[str(v_norm)] = {
            "median": median,
            "non_increasing": bool(all(y <= x for x, y in zip(curve, curve[1:]))),
            "fit": fit_sub_gaussian(config.t_grid, curve),
            "ladder": quantile_ladder(summary, v_norm, config.ladder_depth),
        }
    return rows, notes


# Midpoint probe

MIDPOINT_COLUMNS = ["v_norm", "samples", "hit_probability", "half_width", "mean_geodesic_size", "boundary_touches"]


def midpoint_rows(config, results) -> Tuple[List[Row], Dict[str, Any]]:
    rows = []
    for result in _by_parameter(results):
        hits = result.summaries["hit"]
        rows.append([
            result.parameter, hits.count, hits.mean, binomial_half_width(hits.mean, hits.count),
            result.summaries["geodesic_size"].mean, result.counters.get("boundary_touches", 0),
        ])
    return rows, {"exploratory": True}


# Influence map

INFLUENCE_COLUMNS = ["mode", "v_norm", "edge", "tail", "head", "frequency", "half_width"]


def _point_label(window, vertex: int) -> str:
    return ":".join(str(c) for c in window.point(vertex))


def _influence_checks(config, result: JobResult, window) -> Dict[str, Any]:
    sizes = result.summaries["geodesic_size"]
    n = sizes.count
    bound = (config.b / config.a) * result.parameter
    hits = sum(result.edge_counts.values())
    check: Dict[str, Any] = {
        "samples": n,
        "sum_frequency": hits / n,
        "mean_geodesic_size": sizes.mean,
        "counting_identity": bool(hits == sizes.sums[0]),
        "geodesic_bound": bound,
        "within_geodesic_bound": bool(sizes.maximum is not None and sizes.maximum <= bound + 1e-9),
        "max_frequency": max(result.edge_counts.values()) / n if result.edge_counts else 0.0,
        "boundary_touches": result.counters.get("boundary_touches", 0),
    }
    if result.mode == "shifted":
        m, d, b = shift_scale(config, result.parameter), config.d, config.b
        shifted = result.summaries["distance"]
        plain = result.summaries["distance_unshifted"]
        gap_bound = 2.0 * m * d * b
        allowance = 4.0 * plain.variance_std_error
        transfer = variance_transfer_bound(shifted.variance, m, d, b)
        check.update({
            "m": m,
            "max_shift_gap": result.summaries["shift_gap"].maximum,
            "shift_gap_bound": gap_bound,
            "within_shift_gap_bound": bool(result.summaries["shift_gap"].maximum <= gap_bound + 1e-9),
            "variance_plain": plain.variance,
            "variance_shifted": shifted.variance,
            "variance_transfer_bound": transfer,
            "variance_transfer_holds": bool(plain.variance <= transfer + allowance),
        })
    audits = []
    for name, summary in sorted(result.summaries.items()):
        if not name.startswith("audit_"):
            continue
        edge = int(name.split("_", 1)[1])
        frequency = result.edge_counts.get(edge, 0) / n
        frequency_error = math.sqrt(frequency * (1 - frequency) / n)
        audits.append({
            "edge": edge,
            "tail": _point_label(window, int(window.graph.edges[edge, 0])),
            "influence": summary.mean,
            "frequency": frequency,
            "surrogate_holds": bool(summary.mean <= 2.0 * frequency + 4.0 * (summary.std_error + 2.0 * frequency_error)),
        })
    check["audit"] = audits
    return check


def influence_rows(config, results) -> Tuple[List[Row], Dict[str, Any]]:
    rows, notes = [], {}
    for result in _by_parameter(results):
        window = window_for(config, result.parameter)
        n = result.summaries["geodesic_size"].count
        for edge, hits in sorted(result.edge_counts.items()):
            u, w = window.graph.edges[edge]
            p = hits / n
            rows.append([
                result.mode, result.parameter, edge, _point_label(window, int(u)), _point_label(window, int(w)),
                p, binomial_half_width(p, n),
            ])
        notes[f"{result.parameter}:{result.mode}"] = _influence_checks(config, result, window)

    by_v: Dict[int, Dict[str, float]] = {}
    for result in results:
        n = result.summaries["geodesic_size"].count
        peak = max(result.edge_counts.values()) / n if result.edge_counts else 0.0
        by_v.setdefault(result.parameter, {})[result.mode] = peak
    smoothing = {
        str(v): bool(modes["shifted"] <= modes["plain"])
        for v, modes in sorted(by_v.items())
        if {"plain", "shifted"} <= set(modes)
    }
    if smoothing:
        notes["shift_lowers_max_frequency"] = smoothing
    return rows, notes


RENDERERS: Dict[ExperimentKind, Tuple[List[str], Callable]] = {
    ExperimentKind.VARIANCE_SCAN: (VARIANCE_COLUMNS, variance_rows),
    ExperimentKind.CIRC_SCAN: (CIRCUMFERENCE_COLUMNS, circumference_rows),
    ExperimentKind.TAIL: (TAIL_COLUMNS, tail_rows),
    ExperimentKind.MIDPOINT: (MIDPOINT_COLUMNS, midpoint_rows),
    ExperimentKind.INFLUENCE_MAP: (INFLUENCE_COLUMNS, influence_rows),
}


def build_artifact(config: ExperimentConfig, results: List[JobResult]) -> Artifact:
    if config.kind not in RENDERERS:
        raise ValueError(f"No tabular output for experiment kind '{config.kind.value}'")
    columns, render = RENDERERS[config.kind]
    rows, notes = render(config, results)
    return Artifact(config=config, results=list(results), columns=list(columns), rows=rows, notes=notes)
