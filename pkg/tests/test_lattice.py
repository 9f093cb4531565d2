import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyqspectral.errors import ConfigError, ConvergenceError, PoleError
from pyqspectral.lattice import (
    LatticeSpec,
    QParam,
    SignedLatticeFunction,
    SpectralFunction,
    infinite_product,
    lattice_points,
    signed_lattice_points,
    pi_q,
    q_bracket,
    q_factorial,
    q_gamma,
    q_pochhammer,
)

#
# Lattice windows
#


@pytest.mark.parametrize("q", [0.0, 1.0, 1.2, -0.5, float("nan")])
def test_qparam_rejects_out_of_range(q):
    with pytest.raises(ConfigError):
        QParam(q)


def test_spec_points_and_weights():
    spec = LatticeSpec(0.5, -2, 3)
    assert spec.size == 6
    np.testing.assert_allclose(spec.points(), [4, 2, 1, 0.5, 0.25, 0.125])
    np.testing.assert_allclose(spec.weights(), 0.5 * spec.points())
    assert spec.index_of(-2) == 0
    assert spec.index_of(3) == 5
    with pytest.raises(ConfigError):
        spec.index_of(4)


def test_spec_rejects_empty_window():
    with pytest.raises(ConfigError):
        LatticeSpec(0.5, 3, 2)


def test_shrink_widen_contains():
    spec = LatticeSpec(0.5, -4, 4)
    assert spec.contains(spec.shrink(1))
    assert not spec.shrink(1).contains(spec)
    assert spec.widen(2) == LatticeSpec(0.5, -6, 6)
    assert not spec.contains(LatticeSpec(0.25, -1, 1))


def test_lattice_points_are_ordered_positive_points():
    np.testing.assert_array_equal(lattice_points(LatticeSpec(0.5, -1, 1)), [2.0, 1.0, 0.5])


def test_signed_lattice_points():
    pos, neg = signed_lattice_points(LatticeSpec(0.5, 0, 3))
    np.testing.assert_array_equal(neg, -pos)
    assert pos[0] == 1.0


#
# Lattice functions
#


def test_samples_are_readonly():
    f = SignedLatticeFunction.from_callable(LatticeSpec(0.5, 0, 3), lambda x: x**2)
    with pytest.raises(ValueError):
        f.pos[0] = 1.0


def test_shape_and_finiteness_checked():
    spec = LatticeSpec(0.5, 0, 3)
    with pytest.raises(ConfigError):
        SignedLatticeFunction(spec, np.zeros(3), np.zeros(4))
    with pytest.raises(ConfigError):
        SignedLatticeFunction(spec, [1, 2, np.nan, 4], np.zeros(4))


def test_window_restricts_samples():
    spec = LatticeSpec(0.5, -3, 3)
    f = SignedLatticeFunction.from_callable(spec, lambda x: x)
    w = f.window(-1, 1)
    np.testing.assert_allclose(w.pos.real, [2, 1, 0.5])
    with pytest.raises(ConfigError):
        f.window(-4, 0)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=8, max_size=8),
    st.lists(st.floats(-1e3, 1e3), min_size=8, max_size=8),
)
def test_parity_decomposition(pos, neg):
    f = SignedLatticeFunction(LatticeSpec(0.5, 0, 7), pos, neg)
    even, odd = f.even_part(), f.odd_part()
    np.testing.assert_array_equal(even.pos, even.neg)
    np.testing.assert_array_equal(odd.pos, -odd.neg)
    np.testing.assert_allclose((even + odd).stacked(), f.stacked(), atol=1e-12)


def test_spectral_function_layout():
    spec = LatticeSpec(0.5, 0, 2)
    full = SpectralFunction(spec, [1, 2, 3], [4, 5, 6])
    assert full.full_line
    np.testing.assert_allclose(full.xi(), [1, 0.5, 0.25, -1, -0.5, -0.25])
    back = SpectralFunction.from_stacked(spec, full.stacked(), True)
    np.testing.assert_array_equal(back.neg, full.neg)

    half = SpectralFunction(spec, [1, 2, 3])
    assert not half.full_line
    with pytest.raises(ConfigError):
        full + half


#
# q-arithmetic
#


def test_q_bracket_integer_is_geometric_sum():
    assert q_bracket(5, 0.5) == pytest.approx(sum(0.5**k for k in range(5)), rel=1e-15)


def test_q_bracket_classical_limit():
    assert q_bracket(2.5, 1 - 1e-9) == pytest.approx(2.5, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 2.5, 4.0])
@pytest.mark.parametrize("gap", [1e-2, 1e-3, 1e-4])
def test_q_bracket_approaches_alpha_linearly(alpha, gap):
    rate = (alpha - q_bracket(alpha, 1 - gap)) / gap
    assert rate == pytest.approx(alpha * (alpha - 1) / 2, rel=2e-2)


def test_q_factorial():
    q = 0.3
    assert q_factorial(0, q) == 1.0
    assert q_factorial(3, q) == pytest.approx(q_bracket(2, q) * q_bracket(3, q), rel=1e-15)
    with pytest.raises(ConfigError):
        q_factorial(-1, q)


@pytest.mark.parametrize("a, q", [(0.3, 0.5), (-0.7, 0.5), (0.5, 0.9)])
def test_q_pochhammer_against_mpmath(a, q):
    assert q_pochhammer(a, q, 0) == 1.0
    assert q_pochhammer(a, q, 3) == pytest.approx(float(mpmath.qp(a, q, 3)), rel=1e-14)
    assert q_pochhammer(a, q, math.inf) == pytest.approx(float(mpmath.qp(a, q)), rel=1e-13)


def test_q_pochhammer_rejects_bad_arguments():
    with pytest.raises(ConvergenceError):
        q_pochhammer(1.5, 0.5, math.inf)
    with pytest.raises(ConfigError):
        q_pochhammer(0.3, 0.5, -1)
    with pytest.raises(ConfigError):
        q_pochhammer(0.3, 0.5, math.inf, eps=0.0)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
@pytest.mark.parametrize("a", [-0.7, 0.2, 1.5])
def test_q_pochhammer_recursion(a, q):
    for n in range(8):
        assert q_pochhammer(a, q, n + 1) == pytest.approx(
            q_pochhammer(a, q, n) * (1 - a * q**n), rel=1e-14, abs=1e-300
        )


def test_q_pochhammer_eps_controls_truncation():
    coarse = q_pochhammer(0.5, 0.5, math.inf, eps=1e-3)
    exact = float(mpmath.qp(0.5, 0.5))
    assert coarse != exact
    assert abs(coarse - exact) <= 2e-3
    assert q_pochhammer(0.5, 0.5, math.inf) == pytest.approx(exact, rel=1e-14)


def test_infinite_product_tail_and_pole():
    value = infinite_product(0.3, 0.5)
    assert value.factors > 0
    assert value.tail_bound < 1e-28
    with pytest.raises(PoleError):
        infinite_product(4.0, 0.5)


def test_q_gamma_matches_factorials_and_mpmath():
    q = 0.5
    assert q_gamma(1.0, q) == pytest.approx(1.0, rel=1e-14)
    assert q_gamma(5.0, q) == pytest.approx(q_factorial(4, q), rel=1e-12)
    assert q_gamma(2.5, q) == pytest.approx(float(mpmath.qgamma(2.5, q)), rel=1e-12)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
@pytest.mark.parametrize("x", [0.5, 1.7, 3.2])
def test_q_gamma_functional_equation(x, q):
    assert q_gamma(x + 1, q) == pytest.approx(q_bracket(x, q) * q_gamma(x, q), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -3.0])
def test_q_gamma_poles(x):
    with pytest.raises(PoleError):
        q_gamma(x, 0.5)


@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_pi_q_against_mpmath(q):
    expected = float(mpmath.qgamma(0.5, q * q) / mpmath.sqrt(1 + q))
    assert pi_q(q) > 0
    assert pi_q(q) == pytest.approx(expected, rel=1e-12)


def test_pi_q_classical_limit():
    assert pi_q(0.999) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-2)
