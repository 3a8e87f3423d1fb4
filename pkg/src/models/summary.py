from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple, Any

import numpy as np
from scipy.stats import norm

from .errors import ShardMismatchError

Z95 = float(norm.ppf(0.975))
MOMENTS = 4


def _coalesce(ranges: Iterable[Tuple[int, int]]) -> List[Tuple[int, int]]:
    merged: List[Tuple[int, int]] = []
    for lo, hi in sorted((int(lo), int(hi)) for lo, hi in ranges if hi > lo):
        if merged and lo < merged[-1][1]:
            raise ShardMismatchError(
                f"Sample range [{lo}, {hi}) overlaps [{merged[-1][0]}, {merged[-1][1]})"
            )
        if merged and lo == merged[-1][1]:
            merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


@dataclass
class EstimatorSummary:
    """
    Streaming summary of a real-valued sample.

    Power sums are kept as exact rationals, so merging is associative and
    commutative bit for bit and every derived statistic depends only on the
    multiset of values. An optional value histogram supports medians and tails.
    """
    count: int = 0
    sums: List[Fraction] = field(default_factory=lambda: [Fraction(0)] * MOMENTS)
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    histogram: Optional[Dict[float, int]] = None
    index_ranges: List[Tuple[int, int]] = field(default_factory=list)

    @classmethod
    def empty(cls, keep_histogram: bool = False) -> "EstimatorSummary":
        return cls(histogram={} if keep_histogram else None)

    @classmethod
    def of(cls, values: Iterable[float], keep_histogram: bool = False) -> "EstimatorSummary":
        summary = cls.empty(keep_histogram)
        for value in values:
            summary.add(value)
        return summary

    def add(self, value: float) -> None:
        value = float(value)
        exact = Fraction(value)
        power = Fraction(1)
        for k in range(MOMENTS):
            power *= exact
            self.sums[k] += power
        self.count += 1
        self.minimum = value if self.minimum is None else min(self.minimum, value)
        self.maximum = value if self.maximum is None else max(self.maximum, value)
        if self.histogram is not None:
            self.histogram[value] = self.histogram.get(value, 0) + 1

    def cover(self, start: int, stop: int) -> None:
        """Record that sample indices [start, stop) contributed"""
        self.index_ranges = _coalesce(self.index_ranges + [(start, stop)])

    def merge(self, other: "EstimatorSummary") -> "EstimatorSummary":
        if (self.histogram is None) != (other.histogram is None):
            raise ShardMismatchError("Cannot merge summaries with and without histograms")
        histogram = None
        if self.histogram is not None:
            histogram = dict(self.histogram)
            for value, hits in other.histogram.items():
                histogram[value] = histogram.get(value, 0) + hits
        extremes = [x for x in (self.minimum, other.minimum) if x is not None]
        highs = [x for x in (self.maximum, other.maximum) if x is not None]
        return EstimatorSummary(
            count=self.count + other.count,
            sums=[x + y for x, y in zip(self.sums, other.sums)],
            minimum=min(extremes) if extremes else None,
            maximum=max(highs) if highs else None,
            histogram=histogram,
            index_ranges=_coalesce(self.index_ranges + other.index_ranges),
        )

    @staticmethod
    def merge_all(summaries: Iterable["EstimatorSummary"]) -> "EstimatorSummary":
        summaries = list(summaries)
        if not summaries:
            raise ValueError("Nothing to merge")
        merged = summaries[0]
        for summary in summaries[1:]:
            merged = merged.merge(summary)
        return merged

    # Derived statistics

    @property
    def exact_mean(self) -> Fraction:
        return self.sums[0] / self.count if self.count else Fraction(0)

    @property
    def mean(self) -> float:
        return float(self.exact_mean)

    @property
    def exact_variance(self) -> Fraction:
        if self.count < 2:
            return Fraction(0)
        s1, s2 = self.sums[0], self.sums[1]
        return (s2 - s1 * s1 / self.count) / (self.count - 1)

    @property
    def variance(self) -> float:
        """Unbiased sample variance"""
        return float(self.exact_variance)

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.variance / self.count)) if self.count else float("nan")

    @property
    def half_width(self) -> float:
        """Half-width of the 95% normal confidence interval for the mean"""
        return Z95 * self.std_error

    @property
    def variance_std_error(self) -> float:
        n = self.count
        if n < 4:
            return float("nan")
        mu = self.exact_mean
        s1, s2, s3, s4 = self.sums
        central4 = (s4 - 4 * mu * s3 + 6 * mu * mu * s2 - 4 * mu ** 3 * s1 + n * mu ** 4) / n
        var = self.exact_variance
        spread = (central4 - var * var * Fraction(n - 3, n - 1)) / n
        return float(np.sqrt(max(float(spread), 0.0)))

    @property
    def variance_half_width(self) -> float:
        return Z95 * self.variance_std_error

    def _sorted_histogram(self) -> List[Tuple[float, int]]:
        if self.histogram is None:
            raise ValueError("Summary was built without a value histogram")
        return sorted(self.histogram.items())

    @property
    def median(self) -> Optional[float]:
        """Lower median, available when a histogram was kept"""
        if self.histogram is None or not self.count:
            return None
        seen = 0
        for value, hits in self._sorted_histogram():
            seen += hits
            if 2 * seen >= self.count:
                return value
        return None

    def exceedance(self, center: float, radius: float) -> float:
        """Empirical P[|X - center| >= radius]"""
        hits = sum(h for value, h in self._sorted_histogram() if abs(value - center) >= radius - 1e-12)
        return hits / self.count

    def upper_quantile(self, u: float) -> float:
        """s(u) = inf{t : P[X > t] < u}"""
        above = self.count
        for value, hits in self._sorted_histogram():
            above -= hits
            if above < u * self.count:
                return value
        return float(self.maximum)

    # Serialization

    def to_record(self) -> Dict[str, Any]:
        record = {
            "count": self.count,
            "sums": [str(s) for s in self.sums],
            "min": self.minimum,
            "max": self.maximum,
            "ranges": [list(r) for r in self.index_ranges],
        }
        if self.histogram is not None:
            record["histogram"] = [[value, hits] for value, hits in self._sorted_histogram()]
        return record

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "EstimatorSummary":
        histogram = None
        if "histogram" in record:
            histogram = {float(value): int(hits) for value, hits in record["histogram"]}
        return cls(
            count=int(record["count"]),
            sums=[Fraction(s) for s in record["sums"]],
            minimum=record.get("min"),
            maximum=record.get("max"),
            histogram=histogram,
            index_ranges=[(int(lo), int(hi)) for lo, hi in record.get("ranges", [])],
        )
