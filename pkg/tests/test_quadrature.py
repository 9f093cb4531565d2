import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyqspectral.errors import ConfigError, LatticeRangeError, NumericError
from pyqspectral.families import indicator
from pyqspectral.lattice import LatticeSpec, SignedLatticeFunction, SpectralFunction
from pyqspectral.quadrature import (
    TimeGrid,
    TimeIndexedFamily,
    ck_norm,
    gauss_legendre_panels,
    jackson_integral_finite,
    jackson_integral_improper,
    l2_norm,
    lp_norm,
    sobolev_norm,
    sup_norm,
    time_derivative,
    time_quadrature,
)


def bump(spec):
    return SignedLatticeFunction.from_callable(spec, lambda x: np.exp(-(x**2)))


#
# Jackson sums
#


def test_finite_jackson_integral_of_square():
    q = 0.5
    result = jackson_integral_finite(lambda t: t**2, 1.0, q, K=199)
    assert result.value.real == pytest.approx((1 - q) / (1 - q**3), rel=1e-14)
    assert result.tail < 1e-100


@pytest.mark.parametrize("K", [0, 1, 5, 10])
@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
def test_finite_jackson_integral_of_one_keeps_k_plus_one_terms(q, K):
    result = jackson_integral_finite(np.ones_like, 1.0, q, K)
    assert result.value.real == pytest.approx(1 - q ** (K + 1), rel=1e-14)
    assert result.head == pytest.approx(1 - q)
    assert result.tail == pytest.approx((1 - q) * q**K)


def test_finite_jackson_integral_rejects_negative_depth():
    with pytest.raises(ConfigError):
        jackson_integral_finite(np.ones_like, 1.0, 0.5, -1)


def test_finite_jackson_integral_rejects_nan():
    with pytest.raises(NumericError):
        jackson_integral_finite(lambda t: np.where(t < 0.3, np.nan, t), 1.0, 0.5, K=9)


def test_improper_integral_widening_stays_within_indicators():
    spec = LatticeSpec(0.5, -12, 40)
    narrow = jackson_integral_improper(bump(spec))
    wide = jackson_integral_improper(bump(spec.widen(1)))
    assert abs(wide.value - narrow.value) <= max(narrow.head, narrow.tail)


def test_improper_integral_of_indicator_is_its_weight():
    spec = LatticeSpec(0.5, -4, 8)
    for k in (-4, 0, 3, 8):
        f = indicator(spec, k=k)
        assert jackson_integral_improper(f).value == pytest.approx((1 - 0.5) * 0.5**k, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.floats(-10, 10, allow_nan=False),
    beta=st.floats(-10, 10, allow_nan=False),
    seed=st.integers(0, 2**32 - 1),
)
def test_improper_integral_is_linear(alpha, beta, seed):
    spec = LatticeSpec(0.5, -4, 8)
    rng = np.random.default_rng(seed)
    f, g = rng.normal(size=spec.size), rng.normal(size=spec.size)
    lhs = jackson_integral_improper(alpha * f + beta * g, spec).value
    rhs = alpha * jackson_integral_improper(f, spec).value + beta * jackson_integral_improper(g, spec).value
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(alpha) + abs(beta)) * spec.weights().sum() * 10


def test_improper_integral_of_bare_array_needs_window():
    spec = LatticeSpec(0.5, 0, 3)
    with pytest.raises(ConfigError):
        jackson_integral_improper(np.ones(4))
    result = jackson_integral_improper(np.ones(4), spec)
    assert result.value.real == pytest.approx(spec.weights().sum())


#
# Norms
#


def test_lp_norm_variants():
    spec = LatticeSpec(0.5, -12, 40)
    f = bump(spec)
    assert lp_norm(f, 2) == pytest.approx(l2_norm(f), rel=1e-14)
    assert lp_norm(f, math.inf) == sup_norm(f) == pytest.approx(1.0, rel=1e-12)
    assert l2_norm(f, full_line=True) == pytest.approx(math.sqrt(2) * l2_norm(f), rel=1e-14)
    with pytest.raises(ConfigError):
        lp_norm(f, 0.5)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sobolev_norm_zero_order_is_l2(seed):
    spec = LatticeSpec(0.5, -4, 8)
    rng = np.random.default_rng(seed)
    u = SpectralFunction(spec, rng.normal(size=spec.size), rng.normal(size=spec.size))
    assert sobolev_norm(u, 0.0) == pytest.approx(l2_norm(u, full_line=True), rel=1e-14)
    assert sobolev_norm(u, 1.0) > sobolev_norm(u, 0.0)


#
# Time grids
#


def test_uniform_grid_and_refinement():
    grid = TimeGrid.uniform(2.0, 5)
    assert grid.h == pytest.approx(0.5)
    fine = grid.refine()
    assert len(fine) == 9
    assert fine.h == pytest.approx(0.25)
    np.testing.assert_allclose(fine.nodes[::2], grid.nodes)


@pytest.mark.parametrize(
    "T, nodes", [(1.0, [0.0]), (1.0, [0.1, 1.0]), (1.0, [0.0, 0.6, 0.5, 1.0]), (-1.0, [0.0, -1.0])]
)
def test_grid_validation(T, nodes):
    with pytest.raises(ConfigError):
        TimeGrid(T, nodes)


def test_family_interpolation_exact_for_linear():
    spec = LatticeSpec(0.5, 0, 4)
    f = bump(spec)
    grid = TimeGrid.uniform(1.0, 5)
    family = TimeIndexedFamily(grid, [f * float(t) for t in grid.nodes])
    np.testing.assert_allclose(family.at(0.3).stacked(), 0.3 * f.stacked(), atol=1e-15)
    assert family.interpolation_error() == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ConfigError):
        family.at(1.5)


def test_family_length_must_match_grid():
    spec = LatticeSpec(0.5, 0, 4)
    with pytest.raises(ConfigError):
        TimeIndexedFamily(TimeGrid.uniform(1.0, 3), [bump(spec)] * 2)


#
# Time quadrature
#


def test_panel_weights_sum_to_length():
    _, weights = gauss_legendre_panels(2.0, n=3)
    assert weights.sum() == pytest.approx(2.0, rel=1e-14)


def test_time_quadrature_exact_for_degree_seven():
    assert time_quadrature(lambda t: t**7, 2.0, n=1) == pytest.approx(32.0, rel=1e-13)
    vector = time_quadrature(lambda t: np.array([1.0, t]), 2.0, n=2)
    np.testing.assert_allclose(vector, [2.0, 2.0], rtol=1e-14)


def test_time_quadrature_convergence_order():
    exact = (math.exp(5.0) - 1.0) / 5.0
    errors = [abs(time_quadrature(lambda t: math.exp(5 * t), 1.0, n=n) - exact) for n in (1, 2)]
    assert errors[0] / errors[1] > 100


def test_time_derivative_of_quadratic():
    nodes = np.array([0.0, 0.1, 0.25, 0.5, 0.7, 1.0])
    values = nodes**2
    np.testing.assert_allclose(time_derivative(values, nodes, 1), 2 * nodes, atol=1e-12)
    np.testing.assert_allclose(time_derivative(values, nodes, 2), 2.0, atol=1e-10)
    with pytest.raises(ConfigError):
        time_derivative(values, nodes, 3)
    with pytest.raises(LatticeRangeError):
        time_derivative(values[:2], nodes[:2], 1)


def test_ck_norm_of_linear_family():
    spec = LatticeSpec(0.5, -12, 40)
    f = bump(spec)
    grid = TimeGrid.uniform(1.0, 5)
    family = TimeIndexedFamily(grid, [f * float(t) for t in grid.nodes])
    expected = 2 * l2_norm(f, full_line=True)
    assert ck_norm(family, 1) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ConfigError):
        ck_norm(family, 1, space_norm="h1")

    short = TimeIndexedFamily(TimeGrid.uniform(1.0, 2), [f * 0.0, f])
    with pytest.raises(LatticeRangeError):
        ck_norm(short, 1)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_time_quadrature_halving_reduces_error(n):
    exact = math.sin(7.0) / 7.0
    coarse = abs(time_quadrature(lambda t: math.cos(7 * t), 1.0, n=n) - exact)
    fine = abs(time_quadrature(lambda t: math.cos(7 * t), 1.0, n=2 * n) - exact)
    assert coarse / fine >= 2**6
