from pathlib import Path

import pytest
import yaml

from src.orchestrator.engine import ExperimentEngine
from src.orchestrator.limits import LimitsPolicy
from src.orchestrator.parser import ExperimentConfigParser
from src.orchestrator.results_store import ResultStore
from src.orchestrator.sample_executor import SampleExecutor

LIMITS = Path(__file__).resolve().parent.parent / "config" / "limits.yaml"


@pytest.fixture
def relaxed_limits(tmp_path) -> LimitsPolicy:
    """Shipped limits with the tail minimum lowered for desk-sized runs"""
    policy = yaml.safe_load(LIMITS.read_text())
    policy["rules"]["min_tail_samples"] = 10
    path = tmp_path / "limits.yaml"
    path.write_text(yaml.safe_dump(policy))
    return LimitsPolicy(str(path))


@pytest.fixture
def engine(relaxed_limits, tmp_path) -> ExperimentEngine:
    return ExperimentEngine(
        executor=SampleExecutor(workers=1, chunk_size=7),
        limits=relaxed_limits,
        store=ResultStore(str(tmp_path)),
    )


@pytest.fixture
def make_config():
    parser = ExperimentConfigParser()

    def build(kind: str, **values):
        return parser.parse(values, kind=kind)

    return build
