from pathlib import Path

import pytest

from src.models.errors import ConfigValidationError
from src.models.experiment import ExperimentKind, ShardSpec, TorusFamily, plan_jobs
from src.orchestrator.parser import ExperimentConfigParser

EXAMPLES = Path(__file__).resolve().parent.parent / "config" / "experiments"


def test_parse_experiment():
    parser = ExperimentConfigParser()

    definition = """
    kind: circ-scan
    family: ladder
    a: 1
    b: 3
    n_values: [4, 8]
    samples: 200
    seed: 12
    """

    config = parser.parse(definition)

    assert config.kind is ExperimentKind.CIRC_SCAN
    assert config.family is TorusFamily.LADDER
    assert config.b == 3.0
    assert config.n_values == [4, 8]
    assert config.shard == ShardSpec(0, 1)


def test_parse_json_mapping():
    parser = ExperimentConfigParser()
    config = parser.parse('{"v_norms": [8, 16], "samples": 50}', kind="variance-scan")
    assert config.kind is ExperimentKind.VARIANCE_SCAN
    assert config.v_norms == [8, 16]


@pytest.mark.parametrize("path", sorted(EXAMPLES.glob("*.yaml")), ids=lambda p: p.stem)
def test_example_configs_are_valid(path):
    config = ExperimentConfigParser().parse_file(path)
    assert config.kind.value.replace("-", "_") == path.stem


def test_kind_conflict():
    parser = ExperimentConfigParser()
    with pytest.raises(ConfigValidationError, match="declares kind"):
        parser.parse("kind: tail", kind="midpoint")
    with pytest.raises(ConfigValidationError, match="must name its 'kind'"):
        parser.parse("samples: 10")


def test_unknown_keys_and_bad_values():
    parser = ExperimentConfigParser()
    with pytest.raises(ConfigValidationError, match="Unknown config keys: sides"):
        parser.parse({"sides": [3, 3]}, kind="tail")
    with pytest.raises(ConfigValidationError, match="Invalid experiment definition"):
        parser.parse({"family": "hexagonal"}, kind="circ-scan")
    with pytest.raises(ConfigValidationError, match="mapping"):
        parser.parse("- 1\n- 2\n", kind="tail")


def test_weights_must_be_ordered():
    parser = ExperimentConfigParser()
    with pytest.raises(ConfigValidationError, match="a < b"):
        parser.parse({"a": 2, "b": 2}, kind="variance-scan")


def test_structural_validation():
    parser = ExperimentConfigParser()
    with pytest.raises(ConfigValidationError, match="at least 3"):
        parser.parse({"n_values": [2, 8]}, kind="circ-scan")
    with pytest.raises(ConfigValidationError, match="Shift modes"):
        parser.parse({"shift_modes": ["rotated"]}, kind="influence-map")
    with pytest.raises(ConfigValidationError, match="64-bit"):
        parser.parse({"seed": -1}, kind="tail")


def test_overrides_take_precedence():
    parser = ExperimentConfigParser()
    config = parser.parse({"samples": 100, "seed": 1}, kind="midpoint")
    changed = parser.apply_overrides(config, seed=7, samples=400, shard="1/4", out="mid.csv")
    assert (changed.seed, changed.samples, changed.out) == (7, 400, "mid.csv")
    assert changed.shard.sample_range(changed.samples) == (100, 200)
    assert config.seed == 1


def test_invalid_shards():
    parser = ExperimentConfigParser()
    config = parser.parse({"samples": 3}, kind="variance-scan")
    with pytest.raises(ConfigValidationError, match="Invalid shard"):
        parser.apply_overrides(config, shard="4/4")
    with pytest.raises(ConfigValidationError, match="i/k"):
        parser.apply_overrides(config, shard="two")
    with pytest.raises(ConfigValidationError, match="cannot split"):
        parser.apply_overrides(config, shard="0/5")


def test_config_hash_ignores_shard_and_output():
    parser = ExperimentConfigParser()
    config = parser.parse({"samples": 100}, kind="tail")
    sharded = parser.apply_overrides(config, shard="1/2", out="x.csv")
    assert sharded.config_hash() == config.config_hash()
    assert parser.apply_overrides(config, seed=3).config_hash() != config.config_hash()
    reparsed = parser.parse(config.to_dict(), kind="tail")
    assert reparsed.config_hash() == config.config_hash()


def test_missing_file():
    with pytest.raises(ConfigValidationError, match="not found"):
        ExperimentConfigParser().parse_file("does/not/exist.yaml")


def test_job_plan():
    parser = ExperimentConfigParser()
    config = parser.parse({"v_norms": [8, 16], "shift_modes": ["plain", "shifted"]}, kind="influence-map")
    assert [job.id for job in plan_jobs(config)] == [
        "influence-map:8:plain",
        "influence-map:8:shifted",
        "influence-map:16:plain",
        "influence-map:16:shifted",
    ]
