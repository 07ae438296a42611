import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omsim.model import (
    ModeParity,
    ParameterError,
    PhysicalConstants,
    SystemParams,
    check_single_mode_validity,
    derive_scales,
    detuning,
    max_abs_detuning,
    mode_frequency_jet,
    mode_frequency_offset,
)
from omsim.validation import five_point

import oracles

C_L = oracles.C / 0.06


def test_wavelength_is_one_micron(params):
    assert params.wavelength == pytest.approx(1000e-9, rel=1e-15)


def test_defaults_resolve(params):
    assert params.gamma == pytest.approx(1e-2 * params.omega_m)
    assert params.kappa == pytest.approx(50 * params.omega_m)
    assert params.q_s == pytest.approx(params.wavelength / 8)
    assert params.drive_frequency_rule == "resonant-at-q_s"


def test_thermal_occupation_zero_temperature():
    s = derive_scales(SystemParams(temperature=0.0))
    assert s.n_th == 0.0


def test_thermal_occupation_one_millikelvin(scales, params):
    ref = oracles.bose(params.omega_m, 1e-3)
    assert scales.n_th == pytest.approx(ref, rel=1e-12)
    assert scales.n_th == pytest.approx(2.08e2, rel=5e-3)


def test_zero_point_spreads(scales, params):
    assert scales.q_z == pytest.approx(math.sqrt(oracles.HBAR / (params.mass * params.omega_m)), rel=1e-15)
    assert scales.q_z == pytest.approx(5.8e-14, rel=1e-2)
    assert scales.q_z * scales.p_z == pytest.approx(oracles.HBAR, rel=1e-15)


def test_drive_amplitude(scales, params):
    ref = math.sqrt(2 * params.kappa * params.power / (oracles.HBAR * scales.omega_l))
    assert scales.alpha_L == pytest.approx(ref, rel=1e-14)
    assert scales.alpha_L > 0


def test_resonant_drive_frequency(scales, params):
    ref = oracles.branch(params.q_s, params.wavelength, 0.06, 0.8, True, scales.omega_n)
    assert scales.omega_l == pytest.approx(ref, rel=1e-15)


@pytest.mark.parametrize("field,kwargs", [
    ("r_c", {"r_c": 1.0}),
    ("r_c", {"r_c": -0.1}),
    ("mass", {"mass": 0.0}),
    ("kappa", {"kappa": -1.0}),
    ("omega_m", {"omega_m": float("nan")}),
    ("gamma", {"gamma": -1.0}),
    ("power", {"power": -1.0}),
    ("temperature", {"temperature": -1.0}),
    ("mode_order", {"mode_order": 0}),
    ("parity", {"parity": "sideways"}),
    ("gamma", {"gamma": 2 * math.pi * 1e5 / 5}),  # Q_m = 5 < 10 at T > 0
])
def test_parameter_rejection(field, kwargs):
    with pytest.raises(ParameterError) as info:
        SystemParams(**kwargs)
    assert info.value.field == field


def test_low_quality_allowed_at_zero_temperature():
    SystemParams(gamma=2 * math.pi * 1e5 / 5, temperature=0.0)


def test_constants_validated():
    with pytest.raises(ParameterError):
        PhysicalConstants(c=0.0)


def test_even_branch_at_origin_is_bare_mode(params, scales):
    omega, _, _ = mode_frequency_jet(0.0, "even", params, scales)
    assert omega == scales.omega_n
    assert mode_frequency_offset(0.0, "even", params) == 0.0


def test_odd_branch_at_q_s(params, scales):
    omega, d1, d2 = mode_frequency_jet(params.q_s, "odd", params, scales)
    expected = scales.omega_n + math.pi * C_L - C_L * math.asin(0.8)
    assert omega == pytest.approx(expected, rel=1e-15)
    assert abs(d2) < 1e-12 * C_L * 0.8 * (4 * math.pi / params.wavelength) ** 2


def test_jet_matches_direct_branch(params, scales):
    q = np.linspace(0, params.wavelength, 37)
    for parity in ModeParity:
        got = mode_frequency_offset(q, parity, params)
        ref = [oracles.branch(x, params.wavelength, 0.06, 0.8, parity is ModeParity.ODD, 0.0) for x in q]
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-5)


def test_first_derivative_central_difference(params, scales):
    q = params.q_s + params.wavelength / 16
    h = params.wavelength * 1e-6
    _, d1, _ = mode_frequency_jet(q, "odd", params, scales)
    fd = (mode_frequency_offset(q + h, "odd", params) - mode_frequency_offset(q - h, "odd", params)) / (2 * h)
    assert float(d1) == pytest.approx(fd, rel=1e-8)


@given(st.floats(0.0, 1.0), st.sampled_from(list(ModeParity)), st.integers(-3, 3))
@settings(max_examples=200, deadline=None)
def test_periodicity(frac, parity, k):
    p = SystemParams()
    q = frac * p.wavelength
    a = mode_frequency_offset(q, parity, p)
    b = mode_frequency_offset(q + k * p.wavelength / 2, parity, p)
    assert abs(b - a) <= 1e-9 * abs(a) + 1e-3


@given(st.floats(-2.0, 2.0))
@settings(max_examples=200, deadline=None)
def test_parity_sum_constant(frac):
    p = SystemParams()
    q = frac * p.wavelength
    total = mode_frequency_offset(q, "even", p) + mode_frequency_offset(q, "odd", p)
    expected = math.pi * C_L - 2 * C_L * math.asin(0.8)
    assert abs(total - expected) <= 1e-9 * abs(expected) + 1e-3


@pytest.mark.parametrize("r_c", [0.0, 0.3, 0.8, 0.95])
def test_derivatives_against_five_point_stencil(r_c):
    p = SystemParams(r_c=r_c)
    s = derive_scales(p)
    q = np.linspace(0.0, p.wavelength / 2, 1000, endpoint=False)
    h = p.wavelength * 1e-4
    for parity in ModeParity:
        _, d1, d2 = mode_frequency_jet(q, parity, p, s)
        fd1, fd2 = five_point(lambda x: mode_frequency_offset(x, parity, p), q, h)
        if r_c == 0.0:
            assert np.all(d1 == 0) and np.all(d2 == 0)
            continue
        assert np.max(np.abs(fd1 - d1)) <= 1e-6 * np.max(np.abs(d1))
        assert np.max(np.abs(fd2 - d2)) <= 1e-6 * np.max(np.abs(d2))


def test_branch_extrema(params):
    q = np.linspace(0, params.wavelength / 2, 20001)
    for parity in ModeParity:
        w = mode_frequency_offset(q, parity, params)
        ends = sorted([float(mode_frequency_offset(0.0, parity, params)),
                       float(mode_frequency_offset(params.wavelength / 4, parity, params))])
        assert w.min() == pytest.approx(ends[0], abs=1e-3)
        assert w.max() == pytest.approx(ends[1], abs=1e-3)


def test_detuning_zero_at_resonances(params, scales):
    k = np.arange(-8, 9)
    d = detuning(params.q_s + k * params.wavelength / 4, params, scales)
    assert np.max(np.abs(d)) < 1e-6 * params.kappa


def test_detuning_at_origin(params, scales):
    assert float(detuning(0.0, params, scales)) == pytest.approx(-C_L * math.asin(0.8), rel=1e-14)
    assert float(detuning(0.0, params, scales)) == pytest.approx(-4.6e9, rel=1e-2)


@given(st.floats(-1.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_detuning_matches_full_difference(frac):
    p = SystemParams()
    s = derive_scales(p)
    q = p.q_s + frac * p.wavelength
    omega, _, _ = mode_frequency_jet(q, p.parity, p, s)
    assert abs(float(detuning(q, p, s)) - (float(omega) - s.omega_l)) <= 1.0


def test_detuning_explicit_drive():
    p = SystemParams()
    s = derive_scales(p)
    pe = SystemParams(omega_l=s.omega_l + 1e7)
    se = derive_scales(pe)
    assert pe.drive_frequency_rule == "explicit"
    q = np.linspace(0, p.wavelength, 11)
    np.testing.assert_allclose(detuning(q, pe, se), detuning(q, p, s) - 1e7, rtol=0, atol=2.0)


def test_max_abs_detuning_bounds_grid(params, scales):
    q = np.linspace(0, params.wavelength, 4001)
    assert np.max(np.abs(detuning(q, params, scales))) <= max_abs_detuning(params, scales) * (1 + 1e-12)


def test_validity_default_pass(params, scales):
    rep = check_single_mode_validity(params, scales)
    gap = math.pi * C_L - 2 * C_L * math.asin(0.8)
    assert rep.gap == pytest.approx(gap, rel=1e-14)
    assert rep.ratio == pytest.approx(params.kappa / gap, rel=1e-14)
    assert rep.ratio < 0.01 and rep.status == "PASS"
    assert rep.drive_in_band


def test_validity_gap_largest_without_reflection():
    p = SystemParams(r_c=0.0)
    assert check_single_mode_validity(p, derive_scales(p)).gap == pytest.approx(math.pi * C_L, rel=1e-15)


def test_validity_error_when_kappa_equals_gap():
    gap = math.pi * C_L - 2 * C_L * math.asin(0.8)
    p = SystemParams(kappa=gap, gamma=2 * math.pi * 1e3)
    assert check_single_mode_validity(p, derive_scales(p)).status == "ERROR"
    p = SystemParams(kappa=0.05 * gap)
    assert check_single_mode_validity(p, derive_scales(p)).status == "WARNING"
