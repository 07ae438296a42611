"""Gaussian fluctuations around the classical orbit and their entanglement.

Quadratures are ordered u = [dq, dp, dx, dy] with the mechanical pair scaled
by the zero-point spreads, so the vacuum variance is 1/2.  The 4x4 covariance
V obeys dV/dt = A V + V A^T + D along the classical trajectory.  Blocks:
V1 = V[:2, :2] (membrane), V2 = V[2:, 2:] (cavity), V3 = V[:2, 2:].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from omsim import kernels
from omsim.dynamics import ClassicalState, IntegrationConfig, IntegrationError
from omsim.model import DerivedScales, SystemParams, detuning, max_abs_detuning, mode_frequency_jet

RATE_GUARD = 0.05
# default step keeps dt * max rate below this, leaving headroom under RATE_GUARD
RATE_TARGET = 0.04
PHYSICALITY_TOL = 1e-4
# negative radicands down to -RADICAND_TOL * scale**2 are treated as roundoff
RADICAND_TOL = 1e-12

_IU = np.triu_indices(4)


class PhysicalityError(RuntimeError):
    """Covariance violated the uncertainty bound beyond tolerance."""

    def __init__(self, t: float, nu_minus: float, result=None):
        super().__init__(f"minimum symplectic eigenvalue {nu_minus:.9f} < 1/2 - {PHYSICALITY_TOL:g} at t = {t:.6e} s")
        self.t = t
        self.nu_minus = nu_minus
        self.result = result


class CovarianceError(ValueError):
    """Covariance matrix that cannot come from a valid state (e.g. negative radicand)."""


@dataclass(frozen=True)
class DriftMatrix:
    matrix: np.ndarray
    delta: float
    g_x: float
    g_y: float
    omega_eff: float


@dataclass(frozen=True)
class NoiseMatrix:
    diagonal: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)


def noise_matrix(params: SystemParams, scales: DerivedScales) -> NoiseMatrix:
    return NoiseMatrix(np.array([0.0, params.gamma * (2.0 * scales.n_th + 1.0), params.kappa, params.kappa]))


def drift_from_scalars(omega_m, gamma, kappa, delta, g_x, g_y, omega_eff) -> np.ndarray:
    return np.array([
        [0.0, omega_m, 0.0, 0.0],
        [-omega_eff, -gamma, -g_x, -g_y],
        [g_y, 0.0, -kappa, delta],
        [-g_x, 0.0, -delta, -kappa],
    ])


def assemble_drift(state: ClassicalState, params: SystemParams, scales: DerivedScales) -> DriftMatrix:
    """Linearised drift at the classical point ``state`` (rad/s)."""
    _, d1, d2 = mode_frequency_jet(state.q0, params.parity, params, scales)
    delta = float(detuning(state.q0, params, scales))
    g = math.sqrt(2.0) * scales.q_z * float(d1) * complex(state.alpha)
    omega_eff = params.omega_m + scales.q_z**2 * float(d2) * abs(state.alpha) ** 2
    a = drift_from_scalars(params.omega_m, params.gamma, params.kappa, delta, g.real, g.imag, omega_eff)
    return DriftMatrix(a, delta, g.real, g.imag, omega_eff)


def covariance_rhs(V, A, D) -> np.ndarray:
    A = A.matrix if isinstance(A, DriftMatrix) else np.asarray(A)
    D = D.matrix if isinstance(D, NoiseMatrix) else np.asarray(D)
    AV = A @ V
    return AV + AV.T + D


def initial_covariance(scales: DerivedScales) -> np.ndarray:
    """Stationary uncoupled state: thermal membrane, vacuum cavity."""
    m = scales.n_th + 0.5
    return np.diag([m, m, 0.5, 0.5])


def tmsv_covariance(r: float) -> np.ndarray:
    """Two-mode squeezed vacuum with squeezing parameter ``r``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    c = 0.5 * math.cosh(2 * r)
    s = 0.5 * math.sinh(2 * r)
    return np.array([
        [c, 0.0, s, 0.0],
        [0.0, c, 0.0, -s],
        [s, 0.0, c, 0.0],
        [0.0, -s, 0.0, c],
    ])


def _det2(b):
    return b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] * b[..., 1, 0]


def _pair(a, det_v):
    """Roots (x-, x+) of x^2 - a x + det_v = 0; the small one via det_v / x+ to avoid cancellation."""
    rad = a * a - 4.0 * det_v
    bad = rad < -RADICAND_TOL * a * a
    if np.any(bad):
        raise CovarianceError(f"negative radicand {np.min(rad[bad]):.3e}: covariance is not a valid state")
    hi = 0.5 * (a + np.sqrt(np.maximum(rad, 0.0)))
    lo = det_v / hi
    return lo, hi


def _invariants(V, cross_sign: float):
    V = np.asarray(V, dtype=float)
    d1 = _det2(V[..., :2, :2])
    d2 = _det2(V[..., 2:, 2:])
    d3 = _det2(V[..., :2, 2:])
    det_v = np.linalg.det(V)
    lo, hi = _pair(d1 + d2 + cross_sign * 2.0 * d3, det_v)
    # zero cross block: the pair is exactly {det V1, det V2}
    product = np.all(V[..., :2, 2:] == 0.0, axis=(-2, -1))
    if np.any(product):
        lo = np.where(product, np.minimum(d1, d2), lo)
        hi = np.where(product, np.maximum(d1, d2), hi)
    return np.sqrt(lo), np.sqrt(hi)


def symplectic_eigenvalues(V):
    """(nu_minus, nu_plus) of a two-mode covariance matrix; physical iff nu_minus >= 1/2."""
    lo, hi = _invariants(V, +1.0)
    if np.ndim(lo) == 0:
        return float(lo), float(hi)
    return lo, hi


def log_negativity(V):
    """(E_N, eta_minus) from the partially transposed symplectic spectrum."""
    eta, _ = _invariants(V, -1.0)
    x = -np.log(2.0 * eta)
    e_n = np.where(x > 0.0, x, 0.0)
    if np.ndim(eta) == 0:
        return float(e_n), float(eta)
    return e_n, eta


def pack_upper(V) -> np.ndarray:
    return np.asarray(V, dtype=float)[_IU]


def unpack_upper(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    V = np.zeros(u.shape[:-1] + (4, 4))
    V[..., _IU[0], _IU[1]] = u
    V[..., _IU[1], _IU[0]] = u
    return V


def max_rate_bound(params: SystemParams, scales: DerivedScales, alpha_max: float) -> float:
    """Upper bound on max(kappa, |Delta|, |G|, |Omega_m|) over all membrane positions."""
    c_L = scales.constants.c / params.cavity_length
    s = params.r_c
    k = 4.0 * math.pi / params.wavelength
    d1_max = c_L * s * k
    d2_max = c_L * s * k * k / math.sqrt(1.0 - s * s)
    g_max = math.sqrt(2.0) * scales.q_z * d1_max * alpha_max
    om_max = params.omega_m + scales.q_z**2 * d2_max * alpha_max**2
    return max(params.kappa, max_abs_detuning(params, scales), g_max, om_max)


def default_cosim_dt(params: SystemParams, scales: DerivedScales, alpha0: complex = 0j) -> float:
    # |alpha| never exceeds max(|alpha(0)|, alpha_L/kappa) under the cavity equation
    alpha_max = max(abs(alpha0), scales.alpha_L / params.kappa)
    return RATE_TARGET / max_rate_bound(params, scales, alpha_max)


@dataclass
class CoSimResult:
    t: np.ndarray
    q0: np.ndarray
    p0: np.ndarray
    alpha: np.ndarray
    V: np.ndarray  # (n, 4, 4)
    E_N: np.ndarray
    eta_minus: np.ndarray
    nu_minus: np.ndarray
    nu_plus: np.ndarray
    final_state: ClassicalState
    final_V: np.ndarray
    worst_rate: float
    config: IntegrationConfig

    @property
    def photon_number(self) -> np.ndarray:
        return self.alpha.real**2 + self.alpha.imag**2

    @property
    def sample_interval(self) -> float:
        return self.config.dt * self.config.sample_stride

    def max_asymmetry(self) -> float:
        return float(np.max(np.abs(self.V - np.swapaxes(self.V, -1, -2))))


def cosimulate(initial: ClassicalState, V0, params: SystemParams, scales: DerivedScales,
               config: IntegrationConfig, *, coupled: bool = True, check_physical: bool = True,
               backend: str | None = None) -> CoSimResult:
    """Advance the classical state and the covariance together with one RK4 stepper.

    ``config.dt = None`` picks a step from :func:`default_cosim_dt`.  With
    ``coupled = False`` the optomechanical coupling is switched off (G = 0,
    Omega_m = omega_m) while the classical orbit still drives the detuning.
    """
    if config.dt is None:
        config = replace(config, dt=default_cosim_dt(params, scales, initial.alpha))
    config.check(params, scales)
    V0 = np.asarray(V0, dtype=float)
    if V0.shape != (4, 4) or not np.allclose(V0, V0.T, rtol=0, atol=1e-12 * np.max(np.abs(V0))):
        raise CovarianceError("V0 must be a symmetric 4x4 matrix")
    sc = kernels.Scaling.from_params(params, scales)
    coef = kernels.coefficients(params, scales)
    y0 = np.concatenate([sc.to_internal(initial.q0, initial.p0, initial.alpha), pack_upper(0.5 * (V0 + V0.T))])
    h = config.dt * params.omega_m
    stride = int(config.sample_stride)
    mod = kernels.get_backend(backend)
    samples, rec, status, fail_step, last, worst = mod.integrate_cosim(
        y0, h, config.n_steps, stride, coef, RATE_GUARD, coupled)
    last_t = initial.t + (config.n_steps if status == 0 else fail_step) * config.dt
    final = ClassicalState(last_t, float(sc.q0(last[0])), float(sc.p0(last[1])), complex(sc.alpha(last[2], last[3])))
    if status == 1:
        raise IntegrationError("co-simulation produced a non-finite state", last_t, final)
    if status == 2:
        raise IntegrationError(f"dt * max drift rate exceeded {RATE_GUARD}; reduce dt", last_t, final)
    samples = samples[:rec]
    V = unpack_upper(samples[:, 4:])
    e_n, eta = log_negativity(V)
    nu_lo, nu_hi = symplectic_eigenvalues(V)
    res = CoSimResult(
        t=initial.t + np.arange(rec) * (stride * config.dt),
        q0=sc.q0(samples[:, 0]),
        p0=sc.p0(samples[:, 1]),
        alpha=sc.alpha(samples[:, 2], samples[:, 3]),
        V=V,
        E_N=np.atleast_1d(e_n),
        eta_minus=np.atleast_1d(eta),
        nu_minus=np.atleast_1d(nu_lo),
        nu_plus=np.atleast_1d(nu_hi),
        final_state=final,
        final_V=unpack_upper(last[4:]),
        worst_rate=float(worst),
        config=config,
    )
    if check_physical:
        bad = np.nonzero(res.nu_minus < 0.5 - PHYSICALITY_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise PhysicalityError(float(res.t[i]), float(res.nu_minus[i]), res)
    return res
