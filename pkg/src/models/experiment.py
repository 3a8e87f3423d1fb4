from dataclasses import dataclass, field, fields
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple
import hashlib
import json

from .errors import ConfigValidationError, ShardMismatchError
from .summary import EstimatorSummary


class ExperimentKind(Enum):
    VARIANCE_SCAN = "variance-scan"
    CIRC_SCAN = "circ-scan"
    TAIL = "tail"
    MIDPOINT = "midpoint"
    INFLUENCE_MAP = "influence-map"
    CHECK_BOOL = "check-bool"
    CHECK_LEMMA = "check-lemma"

    @property
    def sampled(self) -> bool:
        return self not in (ExperimentKind.CHECK_BOOL, ExperimentKind.CHECK_LEMMA)


class JobStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"


class RunStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"


class TorusFamily(Enum):
    SQUARE = "square"
    CYCLE = "cycle"
    LADDER = "ladder"


@dataclass(frozen=True)
class ShardSpec:
    index: int = 0
    count: int = 1

    def __post_init__(self):
        if self.count < 1 or not 0 <= self.index < self.count:
            raise ConfigValidationError(f"Invalid shard {self.index}/{self.count}")

    @classmethod
    def parse(cls, text: str) -> "ShardSpec":
        try:
            index, count = (int(part) for part in str(text).split("/"))
        except ValueError:
            raise ConfigValidationError(f"Shard must look like i/k, got '{text}'")
        return cls(index, count)

    def sample_range(self, total: int) -> Tuple[int, int]:
        """Contiguous block of sample indices owned by this shard"""
        return self.index * total // self.count, (self.index + 1) * total // self.count

    def __str__(self) -> str:
        return f"{self.index}/{self.count}"


# Fields that identify a shard's slice or destination, not the experiment
RUN_LOCAL_FIELDS = ("shard", "out")


@dataclass
class ExperimentConfig:
    kind: ExperimentKind
    d: int = 2
    a: float = 1.0
    b: float = 2.0
    v_norms: List[int] = field(default_factory=lambda: [16, 32, 64, 128])
    family: TorusFamily = TorusFamily.SQUARE
    n_values: List[int] = field(default_factory=lambda: [8, 16, 32])
    m: Optional[int] = None
    margin: Optional[int] = None
    window: Optional[int] = None
    samples: int = 10000
    seed: int = 0
    shard: ShardSpec = field(default_factory=ShardSpec)
    out: Optional[str] = None
    # tail
    t_grid: List[float] = field(default_factory=lambda: [0.25 * i for i in range(13)])
    ladder_depth: int = 6
    # influence map
    shift_modes: List[str] = field(default_factory=lambda: ["plain", "shifted"])
    audit_edges: int = 4
    # verification campaigns
    max_j: int = 12
    indicator_max_j: int = 12
    p_grid: List[float] = field(default_factory=lambda: [round(0.05 * i, 2) for i in range(1, 20)])
    quadrature_every: int = 10
    m_values: List[int] = field(default_factory=lambda: list(range(2, 33)))
    random_flips: int = 100000

    def __post_init__(self):
        # canonical types keep the config hash stable across a JSON round trip
        self.a, self.b = float(self.a), float(self.b)
        self.v_norms = [int(x) for x in self.v_norms]
        self.n_values = [int(x) for x in self.n_values]
        self.m_values = [int(x) for x in self.m_values]
        self.t_grid = [float(x) for x in self.t_grid]
        self.p_grid = [float(x) for x in self.p_grid]

    def to_dict(self, include_run_local: bool = True) -> Dict[str, Any]:
        data = {}
        for item in fields(self):
            if not include_run_local and item.name in RUN_LOCAL_FIELDS:
                continue
            value = getattr(self, item.name)
            if isinstance(value, Enum):
                value = value.value
            elif isinstance(value, ShardSpec):
                value = str(value)
            data[item.name] = value
        return data

    def config_hash(self) -> str:
        """SHA-256 of the experiment identity; shards of one run share it"""
        payload = json.dumps(self.to_dict(include_run_local=False), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def job_parameters(self) -> List[int]:
        if self.kind is ExperimentKind.CIRC_SCAN:
            return list(self.n_values)
        return list(self.v_norms)

    def modes(self) -> List[str]:
        if self.kind is ExperimentKind.INFLUENCE_MAP:
            return list(self.shift_modes)
        return ["plain"]


@dataclass
class JobResult:
    """
    Mergeable outcome of one job over a set of sample indices. Per-edge counts
    are kept sparse: edge id -> number of samples with that edge on the witness.
    """
    job_id: str
    parameter: int
    mode: str = "plain"
    summaries: Dict[str, EstimatorSummary] = field(default_factory=dict)
    edge_counts: Dict[int, int] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=dict)

    def merge(self, other: "JobResult") -> "JobResult":
        if (self.job_id, self.parameter, self.mode) != (other.job_id, other.parameter, other.mode):
            raise ShardMismatchError(f"Cannot merge results of jobs {self.job_id} and {other.job_id}")
        if set(self.summaries) != set(other.summaries):
            raise ShardMismatchError(f"Job {self.job_id}: summaries disagree between shards")
        edge_counts = dict(self.edge_counts)
        for edge, hits in other.edge_counts.items():
            edge_counts[edge] = edge_counts.get(edge, 0) + hits
        counters = dict(self.counters)
        for name, value in other.counters.items():
            counters[name] = counters.get(name, 0) + value
        return JobResult(
            job_id=self.job_id,
            parameter=self.parameter,
            mode=self.mode,
            summaries={name: s.merge(other.summaries[name]) for name, s in self.summaries.items()},
            edge_counts=edge_counts,
            counters=counters,
        )

    @property
    def samples(self) -> int:
        return next(iter(self.summaries.values())).count if self.summaries else 0

    def to_record(self) -> Dict[str, Any]:
        return {
            "job_id": self.job_id,
            "parameter": self.parameter,
            "mode": self.mode,
            "summaries": {name: s.to_record() for name, s in sorted(self.summaries.items())},
            "edge_counts": [[edge, hits] for edge, hits in sorted(self.edge_counts.items())],
            "counters": dict(sorted(self.counters.items())),
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "JobResult":
        return cls(
            job_id=record["job_id"],
            parameter=int(record["parameter"]),
            mode=record.get("mode", "plain"),
            summaries={name: EstimatorSummary.from_record(s) for name, s in record["summaries"].items()},
            edge_counts={int(edge): int(hits) for edge, hits in record.get("edge_counts", [])},
            counters={name: int(value) for name, value in record.get("counters", {}).items()},
        )


@dataclass
class Job:
    id: str
    kind: ExperimentKind
    parameter: int
    mode: str = "plain"
    status: JobStatus = JobStatus.PENDING
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None
    error: Optional[str] = None
    result: Optional[JobResult] = None


@dataclass
class ExperimentRun:
    id: str
    config: ExperimentConfig
    jobs: List[Job] = field(default_factory=list)
    status: RunStatus = RunStatus.PENDING
    created_at: datetime = field(default_factory=datetime.now)
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None

    @property
    def results(self) -> List[JobResult]:
        return [job.result for job in self.jobs if job.result is not None]


def plan_jobs(config: ExperimentConfig) -> List[Job]:
    """One job per (parameter, mode), in config order"""
    return [
        Job(id=f"{config.kind.value}:{parameter}:{mode}", kind=config.kind, parameter=int(parameter), mode=mode)
        for parameter in config.job_parameters()
        for mode in config.modes()
    ]
