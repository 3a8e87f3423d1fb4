"""Randomized and structured verification campaigns for the hypercube inequalities."""
from typing import Any, Dict, Iterator, List, Sequence, Tuple

import numpy as np

from ..utils.logger import ExperimentLogger
from .fourier import (
    BooleanFunctionTable,
    check_bonami_beckner,
    dictator_table,
    fin_bound,
    holder_slack,
    noise_energy_integral,
    point_indicator_table,
    random_table,
    spectral_variance,
    talagrand_classic_ratio,
    talagrand_rhs,
    variance,
)

DEFAULT_P_GRID = [round(0.1 * i, 1) for i in range(1, 10)]
TOLERANCE = 1e-9
# signed slacks; negative means the inequality failed
CHAIN_SLACKS = ("bonami_beckner", "holder", "talagrand", "fin", "fin_rhs")

logger = ExperimentLogger(component="boolean")


def campaign_tables(
    n_random: int, max_j: int, seed: int, indicator_max_j: int = 12
) -> Iterator[Tuple[str, int, BooleanFunctionTable]]:
    """
    Random uniform[-1, 1] tables with |J| cycling through 1..max_j, then every
    point indicator and every dictator up to indicator_max_j coordinates.
    """
    for index in range(n_random):
        j_count = 1 + index % max_j
        yield "random", index, random_table(j_count, seed, index)
    for j_count in range(1, min(indicator_max_j, max_j) + 1):
        for point in range(1 << j_count):
            yield "point", point, point_indicator_table(j_count, point)
        for j in range(j_count):
            yield "dictator", j, dictator_table(j_count, j)


def _finite(slack: float) -> float:
    # no nonzero derivative, nothing to check
    return slack if np.isfinite(slack) else 0.0


def _scale(t: BooleanFunctionTable) -> float:
    return max(1.0, float(np.abs(t.values).max()) ** 2)


def check_table(
    t: BooleanFunctionTable, p_grid: Sequence[float], with_quadrature: bool
) -> Dict[str, float]:
    """Signed slack of every inequality on one table; negative means violated"""
    var = variance(t)
    record = {
        "variance": var,
        "parseval_error": abs(var - spectral_variance(t)),
        "bonami_beckner": check_bonami_beckner(t, p_grid).min_slack,
        "holder": _finite(holder_slack(t, p_grid)),
        "talagrand": talagrand_rhs(t) - var,
        "classic_ratio": talagrand_classic_ratio(t),
    }
    if with_quadrature:
        fin = fin_bound(t)
        record["fin"] = fin - var
        record["fin_rhs"] = talagrand_rhs(t) - fin
        record["noise_energy_error"] = noise_energy_integral(t).relative_error
    return record


def _violations(record: Dict[str, float], scale: float) -> List[str]:
    broken = [
        name for name in CHAIN_SLACKS
        if name in record and record[name] < -TOLERANCE * scale
    ]
    if record["parseval_error"] > TOLERANCE * scale:
        broken.append("parseval")
    if record.get("noise_energy_error", 0.0) > 1e-6:
        broken.append("noise_energy")
    return broken


def run_boolean_campaign(
    n_random: int,
    max_j: int,
    seed: int,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
    indicator_max_j: int = 12,
    quadrature_every: int = 10,
) -> Dict[str, Any]:
    """
    Check every campaign table and return a JSON-serializable report. Quadrature
    checks run on every `quadrature_every`-th table of the sequence.
    """
    if n_random < 0 or not 1 <= max_j:
        raise ValueError(f"Invalid campaign size: n_random={n_random}, max_j={max_j}")
    tables, violations = [], []
    minima: Dict[str, float] = {}
    max_ratio = 0.0
    for position, (family, key, t) in enumerate(campaign_tables(n_random, max_j, seed, indicator_max_j)):
        record = check_table(t, p_grid, with_quadrature=position % max(quadrature_every, 1) == 0)
        broken = _violations(record, _scale(t))
        entry = {"family": family, "key": key, "seed": seed, "j_count": t.j_count, **record}
        tables.append(entry)
        for name in CHAIN_SLACKS:
            if name in record:
                minima[name] = min(minima.get(name, np.inf), record[name])
        max_ratio = max(max_ratio, record["classic_ratio"])
        if broken:
            violations.append({"family": family, "key": key, "j_count": t.j_count, "inequalities": broken})
            logger.log_invariant_event(
                "boolean_inequalities", False, {"family": family, "key": key, "inequalities": broken}
            )

    logger.log_run_status(
        "check-bool", "completed", {"tables": len(tables), "violations": len(violations)}
    )
    return {
        "seed": seed,
        "n_random": n_random,
        "max_j": max_j,
        "indicator_max_j": indicator_max_j,
        "p_grid": [float(p) for p in p_grid],
        "tables": tables,
        "totals": {
            "tables": len(tables),
            "violations": len(violations),
            "min_slack": {name: float(value) for name, value in sorted(minima.items())},
            "max_classic_ratio": float(max_ratio),
        },
        "violations": violations,
    }
