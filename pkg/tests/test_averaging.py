from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.lattice.averaging import (
    LevelDistribution,
    StaircaseSpec,
    audit_staircase,
    default_shift_scale,
    draw_shift,
    exact_level_distribution,
    g_m,
    influence_estimate,
    shift_from_bits,
    shifted_distance,
    staircase_k,
    variance_transfer_bound,
)
from src.lattice.graphs import lattice_window
from src.lattice.metric import distance
from src.lattice.sampling import EnvironmentSampler
from src.models.environment import Environment
from src.models.errors import GraphError

A, B = 1.0, 2.0


def test_staircase_m2_table():
    assert [staircase_k(2, j) for j in range(7)] == [0, 1, 2, 1, 0, 1, 2]
    assert StaircaseSpec(2).table().tolist() == [0, 1, 2, 1, 0]


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=40))
def test_staircase_shape(m):
    assert staircase_k(m, 0) == 0
    assert staircase_k(m, m) == m
    assert staircase_k(m, 2 * m) == 0
    for j in range(m * m):
        step = staircase_k(m, j + 1) - staircase_k(m, j)
        assert step == (1 if j % (2 * m) < m else -1)
        assert 0 <= staircase_k(m, j) <= m


def test_staircase_rejects_bad_arguments():
    with pytest.raises(ValueError):
        staircase_k(0, 1)
    with pytest.raises(ValueError):
        staircase_k(2, -1)


def test_g_m_values():
    assert g_m(np.zeros(9, dtype=np.uint8)) == 0
    assert g_m([1, 1, 0, 0]) == 2
    with pytest.raises(ValueError, match="m\\^2"):
        g_m([1, 0, 1])


def test_g_m_is_one_lipschitz_for_m2():
    for mask in range(16):
        x = np.array([(mask >> i) & 1 for i in range(4)])
        for i in range(4):
            y = x.copy()
            y[i] ^= 1
            assert abs(g_m(x) - g_m(y)) <= 1


def test_level_distribution_m2():
    distribution = exact_level_distribution(2)
    assert distribution.exact
    assert distribution.fractions == (Fraction(2, 16), Fraction(8, 16), Fraction(6, 16))


def test_level_distribution_m3():
    assert exact_level_distribution(3).fractions == (
        Fraction(85, 512), Fraction(171, 512), Fraction(171, 512), Fraction(85, 512),
    )


@pytest.mark.parametrize("m", range(2, 33))
def test_level_distribution_concentration(m):
    distribution = exact_level_distribution(m)
    assert sum(distribution.fractions) == 1
    assert max(distribution.fractions) <= Fraction(2, m)


def test_level_distribution_normal_fallback():
    distribution = exact_level_distribution(65)
    assert not distribution.exact
    assert distribution.fractions is None
    assert distribution.probabilities.sum() == pytest.approx(1.0)
    assert distribution.max_probability <= 2.0 / 65


def test_level_distribution_matches_sampling():
    m, n = 4, 100_000
    rng = np.random.default_rng(17)
    weights = rng.integers(0, 2, size=(n, m * m)).sum(axis=1)
    counts = np.bincount(StaircaseSpec(m).table()[weights], minlength=m + 1)
    exact = exact_level_distribution(m).probabilities
    sigma = np.sqrt(exact * (1 - exact) / n)
    assert np.all(np.abs(counts / n - exact) <= 4 * sigma)


@pytest.mark.parametrize("v_norm, m", [(1, 1), (15, 1), (16, 2), (80, 2), (81, 3), (255, 3), (256, 4)])
def test_default_shift_scale(v_norm, m):
    assert default_shift_scale(v_norm) == m


def test_shift_rows_map_through_g_m():
    x = np.array([[1, 1, 0, 0], [1, 1, 1, 1]])
    shift = shift_from_bits(x)
    assert shift.z == (2, 0)
    assert shift.m == 2


def test_draw_shift_is_reproducible():
    window = lattice_window(2, 16, A, B, shift=2)
    sampler = EnvironmentSampler(window.graph, A, B, seed=6)
    first = draw_shift(sampler, 3, 2, 2)
    assert first.z == draw_shift(sampler, 3, 2, 2).z
    assert all(0 <= c <= 2 for c in first.z)


def test_zero_shift_is_plain_distance():
    window = lattice_window(2, 8, A, B, shift=1)
    env = EnvironmentSampler(window.graph, A, B, seed=1).sample(0)
    x = np.zeros((2, 1), dtype=np.uint8)
    expected = distance(env, window.vertex((0, 0)), window.vertex((8, 0)))
    assert shifted_distance(x, env, (8, 0), window) == expected


def test_uniform_environment_is_translation_invariant():
    window = lattice_window(2, 8, A, B, shift=2)
    env = Environment.constant(window.graph, A, B)
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.integers(0, 2, size=(2, 4))
        assert shifted_distance(x, env, (8, 0), window) == 8 * A


def test_shifted_endpoints_outside_window():
    window = lattice_window(2, 4, A, B, margin=1)
    env = Environment.constant(window.graph, A, B)
    with pytest.raises(GraphError, match="leave the window"):
        shifted_distance(np.array([[1, 1, 0, 0], [1, 1, 0, 0]]), env, (4, 0), window)


def test_shift_moves_distance_by_at_most_2mdb():
    v_norm, d = 16, 2
    m = default_shift_scale(v_norm)
    window = lattice_window(d, v_norm, A, B, shift=m)
    sampler = EnvironmentSampler(window.graph, A, B, seed=10)
    origin, far = window.vertex((0, 0)), window.vertex((v_norm, 0))
    for index in range(100):
        env = sampler.sample(index)
        shift = draw_shift(sampler, index, d, m)
        plain = distance(env, origin, far)
        assert abs(shifted_distance(shift.x, env, (v_norm, 0), window) - plain) <= 2 * m * d * B


def test_variance_transfer_bound_value():
    # var + 4mdb sqrt(var) + 4 m^2 d^2 b^2 with m=1, d=2, b=2
    assert variance_transfer_bound(9.0, 1, 2, 2.0) == 9.0 + 2 * 8 * 3 + 64


def test_far_edge_has_no_influence():
    v_norm = 8
    window = lattice_window(2, v_norm, A, B, shift=1)
    sampler = EnvironmentSampler(window.graph, A, B, seed=13)
    corner = window.graph.edge_id(0, 1)
    estimate = influence_estimate(corner, (v_norm, 0), window, sampler, 50, m=1)
    assert estimate.influence.mean == 0.0
    assert estimate.on_geodesic.mean == 0.0
    assert estimate.boundary_touches == 0


def test_influence_surrogate_on_segment_edge():
    v_norm = 16
    window = lattice_window(2, v_norm, A, B, shift=2)
    sampler = EnvironmentSampler(window.graph, A, B, seed=14)
    e = window.graph.edge_id(window.vertex((8, 0)), window.vertex((9, 0)))
    first = influence_estimate(e, (v_norm, 0), window, sampler, 150, m=2)
    second = influence_estimate(e, (v_norm, 0), window, sampler, 150, m=2, start_index=150)
    merged = first.merge(second)
    assert merged.influence.count == 300
    assert merged.influence.index_ranges == [(0, 300)]
    assert merged.raised.mean <= merged.influence.mean
    assert merged.surrogate_holds()
    with pytest.raises(ValueError):
        first.merge(influence_estimate(e + 1, (v_norm, 0), window, sampler, 1, m=2))
    with pytest.raises(ValueError):
        influence_estimate(e, (v_norm, 0), window, sampler, 0)


def test_audit_staircase_report():
    report = audit_staircase([2, 3, 4, 8], random_flips=2000, seed=1)
    assert [entry["mode"] for entry in report] == ["exhaustive", "exhaustive", "random", "random"]
    for entry in report:
        assert entry["range_ok"]
        assert entry["lipschitz"] == 1
        assert entry["within_bound"]
        assert entry["exact"]


def test_level_bound_is_compared_exactly():
    over = Fraction(2, 3) + Fraction(1, 2 ** 200)
    fractions = (1 - over, over, Fraction(0), Fraction(0))
    distribution = LevelDistribution(
        m=3, probabilities=np.array([float(f) for f in fractions]), exact=True, fractions=fractions
    )
    # the float rounds down onto 2/3
    assert distribution.max_probability == 2 / 3
    assert not distribution.within_bound(Fraction(2, 3))
    assert exact_level_distribution(3).within_bound(Fraction(2, 3))


def test_audit_flags_exact_excess(monkeypatch):
    over = Fraction(1, 2) + Fraction(1, 2 ** 200)
    fractions = (over, 1 - over, Fraction(0), Fraction(0), Fraction(0))
    distribution = LevelDistribution(
        m=4, probabilities=np.array([float(f) for f in fractions]), exact=True, fractions=fractions
    )
    monkeypatch.setattr("src.lattice.averaging.exact_level_distribution", lambda m: distribution)
    (entry,) = audit_staircase([4], random_flips=100, seed=0)
    assert entry["max_level_probability"] == 0.5
    assert not entry["within_bound"]


@pytest.mark.slow
def test_lemma_audit_full_range():
    report = audit_staircase(range(2, 33), random_flips=100_000, seed=0)
    assert all(e["range_ok"] and e["lipschitz"] <= 1 and e["within_bound"] for e in report)
