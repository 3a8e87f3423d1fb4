import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.boolean.fourier import (
    BooleanFunctionTable,
    character_table,
    check_bonami_beckner,
    constant_table,
    dictator_table,
    fin_bound,
    holder_slack,
    influences,
    inverse_walsh_transform,
    naive_walsh_transform,
    noise_energy_integral,
    noise_operator,
    p_norm,
    random_table,
    rho_j,
    spectral_variance,
    subset_sizes,
    talagrand_classic_ratio,
    talagrand_rhs,
    total_influence,
    variance,
    walsh_transform,
)

P_GRID = [round(0.05 * i, 2) for i in range(1, 20)]

tables = st.builds(
    random_table,
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=0, max_value=2 ** 32),
    st.integers(min_value=0, max_value=1000),
)


def test_character_has_a_single_coefficient():
    spectrum = walsh_transform(character_table(4, 0b1010))
    expected = np.zeros(16)
    expected[0b1010] = 1.0
    assert np.allclose(spectrum.coefficients, expected, atol=1e-12)


def test_constant_has_only_the_empty_coefficient():
    coefficients = walsh_transform(constant_table(3)).coefficients
    assert coefficients[0] == 1.0
    assert np.all(coefficients[1:] == 0.0)


@settings(max_examples=40, deadline=None)
@given(tables)
def test_fast_transform_matches_naive_sum(t):
    fast = walsh_transform(t).coefficients
    assert np.allclose(fast, naive_walsh_transform(t).coefficients, atol=1e-12)
    restored = inverse_walsh_transform(walsh_transform(t)).values
    assert np.allclose(restored, t.values, rtol=1e-9, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(tables)
def test_parseval(t):
    assert np.sum(walsh_transform(t).coefficients ** 2) == pytest.approx(np.mean(t.values ** 2), rel=1e-9)
    assert variance(t) == pytest.approx(spectral_variance(t), rel=1e-9, abs=1e-12)


def test_rho_on_characters():
    u = character_table(3, 0b101)
    assert np.array_equal(rho_j(u, 0).values, u.values)
    assert np.array_equal(rho_j(u, 2).values, u.values)
    assert np.all(rho_j(u, 1).values == 0.0)
    with pytest.raises(ValueError, match="Coordinate"):
        rho_j(u, 3)


@settings(max_examples=30, deadline=None)
@given(tables)
def test_rho_masks_coefficients(t):
    for j in range(t.j_count):
        derivative = rho_j(t, j)
        assert np.allclose(rho_j(derivative, j).values, derivative.values, atol=1e-12)
        mask = (np.arange(t.size) >> j) & 1
        expected = walsh_transform(t).coefficients * mask
        assert np.allclose(walsh_transform(derivative).coefficients, expected, atol=1e-9)


def test_noise_operator_endpoints_and_semigroup():
    t = random_table(6, seed=1)
    assert np.allclose(noise_operator(t, 1.0).values, t.values, atol=1e-9)
    assert np.allclose(noise_operator(t, 0.0).values, t.values.mean(), atol=1e-12)
    twice = noise_operator(noise_operator(t, 0.5), 0.6)
    assert np.allclose(twice.values, noise_operator(t, 0.3).values, atol=1e-9)
    with pytest.raises(ValueError, match="Noise parameter"):
        noise_operator(t, 1.5)


def test_p_norms():
    assert p_norm(constant_table(3, -2.5), 1.7) == pytest.approx(2.5)
    u = character_table(5, 0b10011)
    for p in (1.0, 1.5, 2.0, 7.0, math.inf):
        assert p_norm(u, p) == pytest.approx(1.0)
    t = random_table(7, seed=3)
    assert p_norm(t, 1) <= p_norm(t, 2) <= p_norm(t, math.inf)
    with pytest.raises(ValueError):
        p_norm(t, 0.5)


def test_bonami_beckner_closed_forms():
    u = character_table(4, 0b0111)
    report = check_bonami_beckner(u, P_GRID)
    for p, slack in zip(report.p_grid, report.slacks):
        assert slack == pytest.approx(1.0 - p ** 3, abs=1e-12)
    assert report.holds
    constant = check_bonami_beckner(constant_table(4, 2.0), P_GRID)
    assert max(abs(s) for s in constant.slacks) <= 1e-12
    with pytest.raises(ValueError):
        check_bonami_beckner(u, [1.2])


@settings(max_examples=60, deadline=None)
@given(tables)
def test_bonami_beckner_on_random_tables(t):
    assert check_bonami_beckner(t, P_GRID).min_slack >= -1e-9


def test_talagrand_dictator():
    t = dictator_table(4, 1)
    assert variance(t) == pytest.approx(0.25)
    assert talagrand_rhs(t) == pytest.approx(9 / 10, rel=1e-12)
    assert influences(t).tolist() == [0.0, 1.0, 0.0, 0.0]


def test_talagrand_constant_is_zero():
    t = constant_table(5, 3.0)
    assert talagrand_rhs(t) == 0.0
    assert variance(t) == 0.0
    assert talagrand_classic_ratio(t) == 0.0


@settings(max_examples=60, deadline=None)
@given(tables)
def test_talagrand_on_random_tables(t):
    assert variance(t) <= talagrand_rhs(t) + 1e-9


@settings(max_examples=15, deadline=None)
@given(tables)
def test_quadrature_chain(t):
    var, fin, rhs = variance(t), fin_bound(t), talagrand_rhs(t)
    assert var <= fin * (1 + 1e-6) + 1e-12
    assert fin <= rhs * (1 + 1e-6) + 1e-12
    assert noise_energy_integral(t).relative_error <= 1e-6


@settings(max_examples=30, deadline=None)
@given(tables)
def test_holder_step(t):
    assert holder_slack(t, P_GRID) >= -1e-9


def test_total_influence_identities():
    t = random_table(6, seed=9)
    direct = sum(np.mean(rho_j(t, j).values ** 2) for j in range(6))
    assert total_influence(t) == pytest.approx(direct, rel=1e-9)
    # Poincare: var <= total influence
    assert variance(t) <= total_influence(t) + 1e-12


def test_subset_sizes():
    assert subset_sizes(3).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]


def test_table_validation():
    with pytest.raises(ValueError, match="Expected 8 values"):
        BooleanFunctionTable(3, np.zeros(7))
    with pytest.raises(ValueError, match="must lie in"):
        BooleanFunctionTable(25, np.zeros(1))
    t = random_table(2, seed=0)
    with pytest.raises(ValueError):
        t.values[0] = 1.0
