import math

import pytest

from src.models.errors import ShardMismatchError
from src.orchestrator.parser import ExperimentConfigParser
from src.orchestrator.results_store import FORMAT_MARKER, ResultStore, format_value


def _sharded(config, shard, out):
    return ExperimentConfigParser().apply_overrides(config, shard=shard, out=out)


@pytest.mark.parametrize(
    "value, text",
    [
        (0.1, "0.10000000000000001"),
        (2.0, "2"),
        (1 / 3, "0.33333333333333331"),
        (7, "7"),
        (True, "true"),
        (None, ""),
        ("plain", "plain"),
    ],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_float_text_round_trips():
    for value in (math.pi, 1e-300, 123456.789):
        assert float(format_value(value)) == value


def test_render_is_deterministic(engine, make_config):
    config = make_config("variance-scan", v_norms=[4], samples=12, seed=5)
    first = engine.store.render(engine.run(config))
    second = engine.store.render(engine.run(config))
    assert first == second
    assert first.startswith(f"# {FORMAT_MARKER}\n")
    assert "\nv_norm,samples," in first


def test_parse_recovers_config_and_results(engine, make_config):
    config = make_config("midpoint", v_norms=[4], samples=9)
    artifact = engine.run(config)
    parsed_config, results = engine.store.parse(engine.store.render(artifact))
    assert parsed_config.config_hash() == config.config_hash()
    assert [r.to_record() for r in results] == [r.to_record() for r in artifact.results]


def test_two_way_merge_matches_unsharded_run(engine, make_config):
    config = make_config("variance-scan", v_norms=[4, 6], samples=20, seed=11)
    whole = engine.store.render(engine.run(config))
    for i in range(2):
        engine.run(_sharded(config, f"{i}/2", f"s{i}.csv"))
    paths = [engine.store.resolve(f"s{i}.csv") for i in range(2)]

    merged = engine.store.render(engine.store.merge_shards(paths))
    assert merged == whole
    reverse = engine.store.render(engine.store.merge_shards(paths[::-1]))
    assert reverse == whole


def test_four_way_merge_matches_two_way(engine, make_config):
    config = make_config("influence-map", v_norms=[6], samples=16, seed=2, shift_modes=["plain"])
    for k in (2, 4):
        for i in range(k):
            engine.run(_sharded(config, f"{i}/{k}", f"{k}-{i}.csv"))
    two = engine.store.merge_shards([engine.store.resolve(f"2-{i}.csv") for i in range(2)])
    four = engine.store.merge_shards([engine.store.resolve(f"4-{i}.csv") for i in range(4)])
    assert engine.store.render(two) == engine.store.render(four)


def test_merge_of_merged_and_shard(engine, make_config):
    config = make_config("tail", v_norms=[4], samples=30, t_grid=[0.0, 1.0])
    whole = engine.store.render(engine.run(config))
    for i in range(3):
        engine.run(_sharded(config, f"{i}/3", f"t{i}.csv"))
    partial = engine.store.merge_shards([engine.store.resolve(f"t{i}.csv") for i in range(2)])
    engine.store.write(partial, "t01.csv")
    final = engine.store.merge_shards([engine.store.resolve("t01.csv"), engine.store.resolve("t2.csv")])
    assert engine.store.render(final) == whole


def test_tampered_artifacts_rejected(engine, make_config, tmp_path):
    config = make_config("variance-scan", v_norms=[4], samples=8)
    text = engine.store.render(engine.run(config))
    body_start = text.index("\nv_norm,")
    tampered = text[:body_start] + text[body_start:].replace("8", "9", 1)
    with pytest.raises(ShardMismatchError, match="content hash"):
        engine.store.parse(tampered)

    edited = text.replace('"seed":', '"seed":1', 1)
    with pytest.raises(ShardMismatchError, match="config hash"):
        engine.store.parse(edited)

    with pytest.raises(ShardMismatchError, match="format marker"):
        engine.store.parse(text.replace(FORMAT_MARKER, "something else"))


def test_merge_mismatches(engine, make_config):
    first = make_config("variance-scan", v_norms=[4], samples=10, seed=1)
    other = make_config("variance-scan", v_norms=[4], samples=10, seed=2)
    engine.run(_sharded(first, "0/2", "a0.csv"))
    engine.run(_sharded(other, "1/2", "b1.csv"))
    with pytest.raises(ShardMismatchError, match="different experiment"):
        engine.store.merge_shards([engine.store.resolve("a0.csv"), engine.store.resolve("b1.csv")])
    with pytest.raises(ShardMismatchError, match="No shards"):
        engine.store.merge_shards([])
    with pytest.raises(ShardMismatchError, match="overlaps"):
        engine.store.merge_shards([engine.store.resolve("a0.csv")] * 2)


def test_incomplete_merge_still_succeeds(engine, make_config):
    config = make_config("variance-scan", v_norms=[4], samples=10)
    engine.run(_sharded(config, "0/2", "half.csv"))
    merged = engine.store.merge_shards([engine.store.resolve("half.csv")], out="merged.csv")
    assert merged.results[0].samples == 5
    assert merged.config.out == "merged.csv"


def test_write_report(tmp_path):
    store = ResultStore(str(tmp_path))
    text = store.write_report({"b": 1, "a": [1, 2]}, "nested/report.json")
    assert (tmp_path / "nested" / "report.json").read_text() == text
    assert text.index('"a"') < text.index('"b"')
