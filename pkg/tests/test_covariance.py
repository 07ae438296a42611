import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omsim import kernels
from omsim.covariance import (
    CovarianceError,
    PhysicalityError,
    assemble_drift,
    cosimulate,
    covariance_rhs,
    default_cosim_dt,
    drift_from_scalars,
    initial_covariance,
    log_negativity,
    max_rate_bound,
    noise_matrix,
    pack_upper,
    symplectic_eigenvalues,
    tmsv_covariance,
    unpack_upper,
)
from omsim.dynamics import ClassicalState, IntegrationConfig, IntegrationError, initial_state
from omsim.model import SystemParams, derive_scales, detuning, mode_frequency_jet

import oracles


def test_drift_layout():
    A = drift_from_scalars(1.0, 0.1, 5.0, 2.0, 0.3, -0.4, 0.9)
    ref = oracles.drift_elementwise(1.0, 0.1, 5.0, 2.0, 0.3 - 0.4j, 0.9)
    assert np.array_equal(A, ref)


def test_drift_at_empty_cavity_is_uncoupled(params, scales):
    dm = assemble_drift(ClassicalState(0.0, params.q_s, 0.0, 0j), params, scales)
    assert dm.g_x == 0 and dm.g_y == 0
    assert dm.omega_eff == params.omega_m
    assert abs(dm.delta) < 1e-6 * params.kappa


def test_drift_spot_check_random_states(params, scales):
    rng = np.random.default_rng(11)
    for _ in range(100):
        q = params.q_s + rng.uniform(-1, 1) * params.wavelength
        a = complex(*rng.normal(size=2)) * 1e5
        st_ = ClassicalState(0.0, q, rng.normal() * 1e-15, a)
        dm = assemble_drift(st_, params, scales)
        _, d1, d2 = mode_frequency_jet(q, params.parity, params, scales)
        G = math.sqrt(2) * scales.q_z * float(d1) * a
        Om = params.omega_m + scales.q_z**2 * float(d2) * abs(a) ** 2
        ref = oracles.drift_elementwise(params.omega_m, params.gamma, params.kappa,
                                        float(detuning(q, params, scales)), G, Om)
        np.testing.assert_allclose(dm.matrix, ref, rtol=1e-13, atol=1e-13 * np.max(np.abs(ref)))


def test_noise_diagonal(params, scales):
    D = noise_matrix(params, scales).matrix
    assert np.array_equal(np.diag(np.diag(D)), D)
    assert D[0, 0] == 0.0
    assert D[1, 1] == pytest.approx(params.gamma * (2 * scales.n_th + 1), rel=1e-15)
    assert D[2, 2] == D[3, 3] == params.kappa


def test_rhs_examples(params, scales):
    V = initial_covariance(scales)
    A = assemble_drift(ClassicalState(0.0, params.q_s, 0.0, 0j), params, scales)
    dV = covariance_rhs(V, A, noise_matrix(params, scales))
    # mechanical block of a thermal state: rotation terms cancel, damping balances noise
    assert abs(dV[1, 1]) <= 1e-9 * params.gamma * V[1, 1]
    # vacuum cavity is stationary: -2 kappa / 2 + kappa = 0
    assert abs(dV[2, 2]) <= 1e-9 * params.kappa
    # from the zero matrix only the noise survives
    dV0 = covariance_rhs(np.zeros((4, 4)), A, noise_matrix(params, scales))
    assert dV0[1, 1] == pytest.approx(params.gamma * (2 * scales.n_th + 1))


def test_rhs_of_zero_temperature_vacuum():
    p = SystemParams(temperature=0.0, power=0.0)
    s = derive_scales(p)
    V = np.eye(4) / 2
    dV = covariance_rhs(V, assemble_drift(ClassicalState(0.0, p.q_s, 0.0, 0j), p, s), noise_matrix(p, s))
    np.testing.assert_allclose(dV, 0.0, atol=1e-9 * p.omega_m)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_rhs_symmetric(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(4, 4))
    D = np.diag(rng.uniform(0, 1, 4))
    V = oracles.random_gaussian_state(rng)
    dV = covariance_rhs(V, A, D)
    np.testing.assert_array_equal(dV, dV.T)


def test_pack_round_trip():
    rng = np.random.default_rng(0)
    V = oracles.random_gaussian_state(rng)
    assert pack_upper(V).shape == (10,)
    np.testing.assert_array_equal(unpack_upper(pack_upper(V)), np.triu(V) + np.triu(V, 1).T)


def test_vacuum_eigenvalues():
    nu_lo, nu_hi = symplectic_eigenvalues(np.eye(4) / 2)
    assert nu_lo == 0.5 and nu_hi == 0.5
    assert log_negativity(np.eye(4) / 2) == (0.0, 0.5)


def test_thermal_times_vacuum_is_product(scales):
    V = initial_covariance(scales)
    e, eta = log_negativity(V)
    assert e == 0.0
    assert eta == 0.5
    nu_lo, nu_hi = symplectic_eigenvalues(V)
    assert nu_lo == 0.5 and nu_hi == pytest.approx(scales.n_th + 0.5, rel=1e-15)


@pytest.mark.parametrize("r", [0.0, 0.1, 0.5, 1.0, 2.0])
def test_tmsv(r):
    V = tmsv_covariance(r)
    e, eta = log_negativity(V)
    assert e == pytest.approx(2 * r, abs=1e-12)
    assert eta == pytest.approx(0.5 * math.exp(-2 * r), rel=1e-12)
    nu_lo, nu_hi = symplectic_eigenvalues(V)
    # a pure state has nu- = nu+, where the closed form loses half the digits
    assert nu_lo == pytest.approx(0.5, rel=1e-7) and nu_hi == pytest.approx(0.5, rel=1e-7)
    ref_e, _ = oracles.log_neg_eigen(V)
    assert e == pytest.approx(ref_e, abs=1e-10)


def test_tmsv_negative_squeezing_rejected():
    with pytest.raises(ValueError):
        tmsv_covariance(-0.1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_invariants_match_eigenvalue_method(seed):
    """Closed-form symplectic spectrum agrees with |eig(i Omega V)| on random physical states."""
    V = oracles.random_gaussian_state(np.random.default_rng(seed))
    e, eta = log_negativity(V)
    ref_e, ref_eta = oracles.log_neg_eigen(V)
    assert eta == pytest.approx(ref_eta, rel=1e-8)
    assert e == pytest.approx(ref_e, abs=1e-8)
    nu_lo, nu_hi = symplectic_eigenvalues(V)
    ref_lo, ref_hi = oracles.symplectic_eigen(V)
    assert nu_lo == pytest.approx(ref_lo, rel=1e-8)
    assert nu_hi == pytest.approx(ref_hi, rel=1e-8)
    assert nu_lo >= 0.5 * (1 - 1e-9)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_local_symplectic_invariance(seed):
    rng = np.random.default_rng(seed)
    V = oracles.random_gaussian_state(rng)
    S = oracles.rotation(*rng.uniform(0, 6, 2)) @ oracles.single_squeezer(*rng.uniform(-0.5, 0.5, 2))
    e1, _ = log_negativity(V)
    e2, _ = log_negativity(S @ V @ S.T)
    assert e1 == pytest.approx(e2, abs=1e-9)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(3)
    Vs = np.array([oracles.random_gaussian_state(rng) for _ in range(20)])
    e, eta = log_negativity(Vs)
    lo, hi = symplectic_eigenvalues(Vs)
    for i, V in enumerate(Vs):
        assert (e[i], eta[i]) == log_negativity(V)
        assert (lo[i], hi[i]) == symplectic_eigenvalues(V)


def test_invalid_covariance_raises():
    # indefinite symmetric matrix: no real symplectic spectrum exists
    V = np.array([[3.6, 1.3, 0.8, -1.6], [1.3, 1.4, -0.6, -0.8], [0.8, -0.6, -2.4, 1.0], [-1.6, -0.8, 1.0, -1.0]])
    with pytest.raises(CovarianceError):
        symplectic_eigenvalues(V)


def test_rate_bound_dominates_actual_rates(params, scales):
    alpha_max = scales.alpha_L / params.kappa
    bound = max_rate_bound(params, scales, alpha_max)
    q = params.q_s + np.linspace(-0.5, 0.5, 2001) * params.wavelength
    for qi in q:
        dm = assemble_drift(ClassicalState(0.0, qi, 0.0, alpha_max + 0j), params, scales)
        rates = (params.kappa, abs(dm.delta), math.hypot(dm.g_x, dm.g_y), abs(dm.omega_eff))
        assert max(rates) <= bound * (1 + 1e-12)
    assert default_cosim_dt(params, scales) * bound == pytest.approx(0.04)


def test_undriven_thermal_state_stationary(params):
    p = replace(params, power=0.0)
    s = derive_scales(p)
    V0 = initial_covariance(s)
    cfg = IntegrationConfig(duration=5 / p.gamma, dt=0.016 / p.kappa, sample_stride=1 << 20)
    res = cosimulate(ClassicalState(0.0, p.q_s, 0.0, 0j), V0, p, s, cfg)
    assert np.max(np.abs(res.final_V - V0)) <= 1e-6 * np.max(np.abs(V0))
    assert np.all(res.E_N == 0.0)


def test_decoupled_entanglement_decays(params):
    """Without optomechanical coupling a squeezed state can only lose entanglement."""
    p = replace(params, power=0.0)
    s = derive_scales(p)
    cfg = IntegrationConfig(duration=3 / p.kappa, dt=0.016 / p.kappa, sample_stride=4)
    res = cosimulate(ClassicalState(0.0, p.q_s, 0.0, 0j), tmsv_covariance(1.0), p, s, cfg, coupled=False)
    assert res.E_N[0] == pytest.approx(2.0, abs=1e-12)
    assert np.all(np.diff(res.E_N) <= 1e-12)
    assert res.E_N[-1] < 0.1 * res.E_N[0]
    assert np.all(res.nu_minus >= 0.5 - 1e-7)


def test_symmetry_and_determinism(params, scales):
    start = initial_state(params, 0.3 * params.wavelength)
    cfg = IntegrationConfig(duration=0.005 * params.mechanical_period, sample_stride=16)
    V0 = initial_covariance(scales)
    a = cosimulate(start, V0, params, scales, cfg)
    b = cosimulate(start, V0, params, scales, cfg)
    assert a.max_asymmetry() == 0.0
    assert np.array_equal(a.V, b.V) and np.array_equal(a.E_N, b.E_N)
    assert a.worst_rate <= 0.05
    assert a.config.dt == pytest.approx(default_cosim_dt(params, scales))


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_classical_part_matches_classical_integrator(params, scales, backend):
    from omsim.dynamics import simulate

    start = initial_state(params, 0.3 * params.wavelength)
    cfg = IntegrationConfig(duration=0.002 * params.mechanical_period, sample_stride=16)
    res = cosimulate(start, initial_covariance(scales), params, scales, cfg, backend=backend)
    traj = simulate(start, params, scales, replace(cfg, dt=res.config.dt), backend=backend)
    np.testing.assert_array_equal(res.q0, traj.q0)
    np.testing.assert_array_equal(res.alpha, traj.alpha)


def test_unphysical_start_detected(params, scales):
    cfg = IntegrationConfig(duration=1e-9, sample_stride=1)
    with pytest.raises(PhysicalityError) as info:
        cosimulate(initial_state(params, 0.0), np.eye(4) / 4, params, scales, cfg)
    assert info.value.nu_minus == pytest.approx(0.25)
    assert info.value.result is not None


def test_rate_guard_raises(params, scales):
    from omsim.model import max_abs_detuning

    # accepted by the RK4 guard, but |Delta| at a quarter period from q_s gives dt*|Delta| = 0.1
    dt = 0.1 / max_abs_detuning(params, scales)
    cfg = IntegrationConfig(duration=10 * dt, dt=dt)
    start = ClassicalState(0.0, params.q_s + params.wavelength / 8, 0.0, 0j)
    with pytest.raises(IntegrationError, match="rate"):
        cosimulate(start, initial_covariance(scales), params, scales, cfg)


def test_asymmetric_start_rejected(params, scales):
    V = initial_covariance(scales)
    V[0, 1] = 1.0
    with pytest.raises(CovarianceError):
        cosimulate(initial_state(params, 0.0), V, params, scales, IntegrationConfig(duration=1e-9))
