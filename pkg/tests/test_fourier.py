import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyqspectral.errors import ConfigError, DegenerateInputError
from pyqspectral.families import gaussian_bump, indicator, lognormal_bump
from pyqspectral.fourier import (
    PROBE_SCALES,
    KernelPath,
    apply_kernel,
    calibrate,
    diagonalization_residual,
    forward,
    forward_structured,
    inverse,
    kernel_path_matrix,
    parseval_residual,
    reference_config,
    round_trip_error,
    structured_agreement,
    write_spectrum_csv,
)
from pyqspectral.lattice import LatticeSpec, SignedLatticeFunction, SpectralFunction


def smooth_bump(spec, a):
    return gaussian_bump(spec, a=a, power=2)


def interior_functions(spec):
    return [
        lognormal_bump(spec, center=1.0, sigma=1.0),
        gaussian_bump(spec, a=1.0, power=4),
        gaussian_bump(spec, a=0.25, power=2),
    ]


#
# Calibration and inversion
#


def test_calibration(cfg_full, cfg_half):
    assert cfg_full.calibration_residual <= 1e-8
    assert cfg_half.calibration_residual <= 1e-8
    assert cfg_full.raw_scale > 0
    assert cfg_full.calibration_ratio == pytest.approx(
        cfg_full.raw_scale**-0.5, rel=1e-12
    )
    described = cfg_full.describe()
    assert described["mode"] == "full"
    assert described["reference_normalization"] == cfg_full.reference_constant


def test_half_line_sees_half_the_round_trip(cfg_full, cfg_half):
    assert cfg_half.raw_scale / cfg_full.raw_scale == pytest.approx(0.5, rel=1e-4)


@pytest.mark.parametrize("a", PROBE_SCALES)
def test_calibration_family_round_trip_and_parseval(spec, cfg_full, a):
    f = smooth_bump(spec, a)
    assert round_trip_error(f, cfg_full) <= 1e-8
    assert parseval_residual(f, cfg_full) <= 1e-8


def test_parseval_on_interior_functions(spec, cfg_full):
    for f in interior_functions(spec):
        assert parseval_residual(f, cfg_full) <= 1e-6


def test_odd_data_round_trips_in_full_mode(spec, cfg_full):
    f = gaussian_bump(spec, a=1.0, power=3)
    assert round_trip_error(f, cfg_full) <= 1e-6


def test_parseval_of_zero_is_degenerate(spec, cfg_full):
    with pytest.raises(DegenerateInputError):
        parseval_residual(SignedLatticeFunction.zeros(spec), cfg_full)


def test_diagonalization(spec, cfg_full):
    for a in PROBE_SCALES:
        assert diagonalization_residual(smooth_bump(spec, a), cfg_full) <= 1e-6


#
# Modes
#


def test_half_mode_matches_positive_channel_of_full_mode(spec, kernel):
    full = reference_config(spec, "full", kernel)
    half = reference_config(spec, "half", kernel)
    pos = smooth_bump(spec, 1.0).pos
    f = SignedLatticeFunction(spec, pos, np.zeros(spec.size))
    np.testing.assert_allclose(forward(f, half).values, forward(f, full).values, rtol=1e-14)


def test_half_mode_ignores_negative_lattice(spec, cfg_half):
    f = SignedLatticeFunction(spec, np.zeros(spec.size), smooth_bump(spec, 1.0).pos)
    g = forward(f, cfg_half)
    assert not g.full_line
    assert g.is_zero()


def test_half_mode_round_trip_on_positive_bump(spec, cfg_half):
    assert round_trip_error(smooth_bump(spec, 1.0), cfg_half) <= 1e-8


def test_mismatches_rejected(spec, cfg_full, cfg_half):
    with pytest.raises(ConfigError):
        forward(smooth_bump(spec.shrink(1), 1.0), cfg_full)
    with pytest.raises(ConfigError):
        inverse(SpectralFunction.zeros(spec, full_line=False), cfg_full)
    with pytest.raises(ConfigError):
        reference_config(spec, "quarter", cfg_full.kernel)


#
# Algebraic structure
#


@settings(max_examples=20, deadline=None)
@given(st.complex_numbers(max_magnitude=10.0), st.complex_numbers(max_magnitude=10.0))
def test_forward_is_linear(spec, cfg_full, alpha, beta):
    f = gaussian_bump(spec, a=1.0, power=2)
    g = lognormal_bump(spec, parity="odd")
    cfg = cfg_full
    lhs = forward(f * alpha + g * beta, cfg).stacked()
    rhs = (forward(f, cfg) * alpha + forward(g, cfg) * beta).stacked()
    scale = max(1.0, float(np.max(np.abs(rhs))))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * scale)


@pytest.mark.parametrize("mode", ["full", "half"])
def test_structured_forward_agrees(spec, kernel, mode):
    cfg = reference_config(spec, mode, kernel)
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = spec.size
        f = SignedLatticeFunction(
            spec,
            rng.standard_normal(n) + 1j * rng.standard_normal(n),
            rng.standard_normal(n) + 1j * rng.standard_normal(n),
        )
        assert structured_agreement(f, cfg) <= 1e-10
    f = smooth_bump(spec, 1.0)
    np.testing.assert_allclose(
        forward_structured(f, cfg).stacked(), forward(f, cfg).stacked(), atol=1e-12
    )


@pytest.mark.parametrize("mode", ["full", "half"])
def test_kernel_path_matches_spectral_path(spec, kernel, mode):
    cfg = reference_config(spec, mode, kernel)
    f = smooth_bump(spec, 1.0)
    multiplier = np.exp(-0.5 * (1.0 + cfg.xi_squared()))
    spectral = inverse(
        SpectralFunction.from_stacked(spec, multiplier * forward(f, cfg).stacked(), cfg.full_line),
        cfg,
    ).stacked()
    via_kernel = apply_kernel(kernel_path_matrix(multiplier, cfg), f).stacked()
    scale = float(np.max(np.abs(spectral)))
    np.testing.assert_allclose(via_kernel, spectral, atol=1e-10 * scale)
    matrix_free = KernelPath(cfg).apply(multiplier, f).stacked()
    np.testing.assert_allclose(matrix_free, via_kernel, atol=1e-12 * scale)


def test_spectrum_csv(tmp_path, spec, cfg_full):
    path = tmp_path / "spectrum.csv"
    write_spectrum_csv(forward(smooth_bump(spec, 1.0), cfg_full), str(path))
    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == ["j", "sign", "xi", "re", "im"]
    assert len(rows) == 2 * spec.size
    assert {r["sign"] for r in rows} == {"1", "-1"}


#
# Direct-summation references
#


def summed_forward(f, cfg):
    """The forward sum one term at a time, with kernel values looked up per index sum."""
    spec, table = cfg.spec, cfg.kernel
    w = spec.weights()
    samples = {1: f.pos, -1: f.neg}
    signs = (1, -1) if cfg.full_line else (1,)
    out = {}
    for s_xi in signs:
        row = np.zeros(spec.size, dtype=complex)
        for j in range(spec.size):
            total = 0j
            for s_x in signs:
                for k in range(spec.size):
                    m = spec.k_min + j + spec.k_min + k
                    total += w[k] * samples[s_x][k] * complex(table.lookup(m, sign=-s_xi * s_x))
            row[j] = cfg.normalization * total
        out[s_xi] = row
    return out


@pytest.mark.parametrize("mode", ["full", "half"])
def test_forward_matches_term_by_term_sum(mode):
    small = LatticeSpec(0.5, -4, 10)
    cfg = reference_config(small, mode)
    rng = np.random.default_rng(11)
    for f in (
        gaussian_bump(small, a=1.0, power=2),
        SignedLatticeFunction(small, rng.normal(size=small.size), rng.normal(size=small.size)),
    ):
        g = forward(f, cfg)
        expected = summed_forward(f, cfg)
        scale = np.max(np.abs(g.stacked()))
        np.testing.assert_allclose(g.values, expected[1], rtol=0, atol=1e-12 * scale)
        if mode == "full":
            np.testing.assert_allclose(g.neg, expected[-1], rtol=0, atol=1e-12 * scale)


def test_half_mode_transform_of_unit_indicator(spec, cfg_half):
    g = forward(indicator(spec, k=0), cfg_half)
    c = cfg_half.normalization
    expected = c * (1 - spec.q.q) * cfg_half.kernel.lookup(spec.ks(), sign=-1)
    np.testing.assert_allclose(g.values, expected, rtol=1e-14)


@pytest.mark.parametrize("mode", ["full", "half"])
@pytest.mark.parametrize("j", [-3, 0, 7])
def test_inverse_of_single_frequency(spec, cfg_full, cfg_half, mode, j):
    cfg = cfg_full if mode == "full" else cfg_half
    values = np.zeros(spec.size)
    values[spec.index_of(j)] = 1.0
    g = SpectralFunction(spec, values, np.zeros(spec.size) if mode == "full" else None)
    f = inverse(g, cfg)
    amplitude = cfg.normalization * (1 - spec.q.q) * spec.q.q**j
    e = cfg.kernel.lookup(spec.ks() + j)
    np.testing.assert_allclose(f.pos, amplitude * e, rtol=1e-14)
    np.testing.assert_allclose(f.neg, amplitude * np.conj(e), rtol=1e-14)


def test_transforms_of_zero_are_zero(spec, cfg_full):
    zero = SignedLatticeFunction.zeros(spec)
    assert forward(zero, cfg_full).is_zero()
    assert forward_structured(zero, cfg_full).is_zero()
    assert inverse(SpectralFunction.zeros(spec), cfg_full).is_zero()


def test_recalibration_is_reproducible(spec, kernel, cfg_full):
    again = calibrate(spec, "full", kernel)
    assert again.normalization == pytest.approx(cfg_full.normalization, rel=1e-12)
    assert again.raw_scale == pytest.approx(cfg_full.raw_scale, rel=1e-12)


def test_parseval_residual_is_scale_invariant(spec, cfg_full):
    f = smooth_bump(spec, 1.0)
    assert parseval_residual(f * 3.5, cfg_full) == pytest.approx(
        parseval_residual(f, cfg_full), abs=1e-13
    )


def test_diagonalization_of_zero_is_degenerate(spec, cfg_full):
    with pytest.raises(DegenerateInputError):
        diagonalization_residual(SignedLatticeFunction.zeros(spec), cfg_full)
