import networkx as nx
import numpy as np
import pytest

from src.lattice.circumference import (
    circumference_bruteforce,
    circumference_derivative,
    circumference_influence_profile,
    circumference_length,
    default_window,
    square_torus_orbits,
    unroll_torus,
)
from src.lattice.graphs import build_box, build_torus_product, cycle_rotations, ladder_torus, pure_cycle, square_torus
from src.lattice.sampling import EnvironmentSampler, toggle_edge
from src.models.environment import Environment
from src.models.errors import GraphError, InstanceTooLargeError

A, B = 1.0, 2.0

SMALL_TORI = {
    "ladder3": lambda: ladder_torus(3),
    "triangle3": lambda: build_torus_product(nx.cycle_graph(3), cycle_rotations(3), 3),
    "square3": lambda: square_torus(3),
}


def _is_closed_walk(torus, path) -> bool:
    vertices = path.vertices
    if vertices[0] != vertices[-1]:
        return False
    return all(
        set(torus.edges[e].tolist()) == {vertices[i], vertices[i + 1]} for i, e in enumerate(path.edges)
    )


def test_pure_cycle_is_sum_of_lengths():
    torus = pure_cycle(7)
    sampler = EnvironmentSampler(torus, A, B, seed=3)
    for index in range(10):
        env = sampler.sample(index)
        value, path = circumference_length(env)
        assert value == env.weights.sum()
        assert circumference_bruteforce(env) == value
        assert len(path) == 7


@pytest.mark.parametrize("factory", [lambda: square_torus(4), lambda: ladder_torus(5), lambda: pure_cycle(3)])
def test_all_a_circumference(factory):
    torus = factory()
    value, path = circumference_length(Environment.constant(torus, A, B))
    assert value == A * torus.cycle_length
    assert path.winding == 1


def test_ladder_all_a_bruteforce():
    torus = ladder_torus(3)
    assert circumference_bruteforce(Environment.constant(torus, A, B)) == 3 * A


def test_tiny_weights_circumference():
    torus = square_torus(3)
    value, path = circumference_length(Environment.constant(torus, 1e-10, 2e-10))
    assert value == pytest.approx(3e-10, rel=1e-12)
    assert path.winding == 1
    assert len(path) == 3
    assert _is_closed_walk(torus, path)


@pytest.mark.parametrize("name", sorted(SMALL_TORI))
def test_unrolled_search_matches_bruteforce(name):
    torus = SMALL_TORI[name]()
    sampler = EnvironmentSampler(torus, A, B, seed=11)
    for index in range(20):
        env = sampler.sample(index)
        value, _ = circumference_length(env)
        assert value == circumference_bruteforce(env)


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(SMALL_TORI))
def test_unrolled_search_matches_bruteforce_200(name):
    torus = SMALL_TORI[name]()
    sampler = EnvironmentSampler(torus, A, B, seed=12)
    window = default_window(torus, A, B)
    for index in range(200):
        env = sampler.sample(index)
        value, _ = circumference_length(env)
        assert value == circumference_bruteforce(env)
        assert circumference_length(env, window=2 * window)[0] == value


def test_witness_invariants_and_window_stability():
    torus = square_torus(5)
    n = torus.cycle_length
    sampler = EnvironmentSampler(torus, A, B, seed=21)
    window = default_window(torus, A, B)
    for index in range(25):
        env = sampler.sample(index)
        value, path = circumference_length(env)
        assert A * n <= value <= B * n
        assert path.winding == 1
        assert path.displacement == n
        assert path.length == value
        assert len(path) <= B * n / A
        assert _is_closed_walk(torus, path)
        assert circumference_length(env, window=2 * window)[0] == value


def test_negative_derivative_implies_witness_edge_exhaustive():
    """Every environment of K2 x Z/3Z (9 edges, 512 environments)"""
    torus = ladder_torus(3)
    n = torus.cycle_length
    for mask in range(2 ** torus.edge_count):
        env = Environment.from_mask(torus, A, B, mask)
        value, beta = circumference_length(env)
        assert len(beta) <= B * n / A
        for e in range(torus.edge_count):
            flipped, _ = circumference_length(toggle_edge(env, e))
            rho = (value - flipped) / 2.0
            assert abs(rho) <= (B - A) / 2
            if rho < 0:
                assert e in beta
                assert env.bits[e] == 0


def test_derivative_helper_agrees_with_toggling():
    torus = ladder_torus(4)
    env = EnvironmentSampler(torus, A, B, seed=5).sample(0)
    value, _ = circumference_length(env)
    for e in range(torus.edge_count):
        flipped, _ = circumference_length(toggle_edge(env, e))
        assert circumference_derivative(env, e) == (value - flipped) / 2.0


def test_bruteforce_guard():
    env = Environment.constant(square_torus(5), A, B)
    with pytest.raises(InstanceTooLargeError):
        circumference_bruteforce(env)


def test_non_torus_rejected():
    env = Environment.constant(build_box(2, [3, 3]), A, B)
    with pytest.raises(GraphError, match="torus product"):
        circumference_length(env)
    with pytest.raises(GraphError):
        circumference_length(env, torus=ladder_torus(3))


def test_unrolling_maps_back_onto_the_torus():
    torus = ladder_torus(4)
    unrolled = unroll_torus(torus, 3)
    assert unrolled.strip.vertex_count == torus.fiber_size * (torus.cycle_length + 2 * 3 + 1)
    ends = np.sort(unrolled.vertex_map[unrolled.strip.edges], axis=1)
    assert np.array_equal(ends, torus.edges[unrolled.edge_map])
    assert unrolled.layer_vertex(1, 0) == 3 * torus.fiber_size + 1


def test_square_torus_orbits_partition_edges():
    torus = square_torus(4)
    orbits = square_torus_orbits(torus)
    assert len(orbits["fiber"]) == len(orbits["cycle"]) == 16
    assert sorted(np.concatenate([orbits["fiber"], orbits["cycle"]]).tolist()) == list(range(torus.edge_count))


@pytest.mark.parametrize(
    "factory",
    [
        lambda: ladder_torus(4),
        lambda: pure_cycle(4),
        lambda: build_torus_product(nx.cycle_graph(3), cycle_rotations(3), 4),
    ],
)
def test_orbits_need_the_square_torus(factory):
    with pytest.raises(GraphError, match="square torus"):
        square_torus_orbits(factory())


def test_influence_profile_chain():
    torus = ladder_torus(4)
    n = torus.cycle_length
    profile = circumference_influence_profile(EnvironmentSampler(torus, A, B, seed=8), 40)
    checks = profile.chain_checks(A, B, n)
    assert all(checks.values()), checks
    assert profile.length.count == 40
    assert profile.length.index_ranges == [(0, 40)]
    assert int(profile.on_witness.sum()) <= profile.witness_size.sums[0]
    assert np.all(profile.l1 <= (B - A) / 2 * profile.nonzero_probability + 1e-12)


@pytest.mark.slow
def test_raising_probability_is_constant_on_orbits():
    """P[rho_e c < 0] does not depend on the tie-break, so it is orbit invariant"""
    torus = square_torus(4)
    samples = 600
    profile = circumference_influence_profile(EnvironmentSampler(torus, A, B, seed=31), samples)
    for ids in square_torus_orbits(torus).values():
        p = profile.negative_probability[ids]
        center = p.mean()
        sigma = np.sqrt(max(center * (1 - center), 1e-12) / samples)
        assert np.all(np.abs(p - center) <= 4 * sigma + 1e-12)
    assert profile.negative_probability.sum() <= B * torus.cycle_length / A
