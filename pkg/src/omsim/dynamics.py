"""Classical mean-field dynamics of the membrane and the cavity field.

The state is (q0, p0, alpha) in SI units.  Integration runs in the kernel's
nondimensional units (see ``omsim.kernels``) with fixed-step RK4; results are
converted back to SI when the trajectory is assembled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from omsim import kernels
from omsim.model import DerivedScales, SystemParams, detuning, max_abs_detuning, mode_frequency_jet

# RK4 is stable on the imaginary axis for h*|lambda| < 2*sqrt(2); keep a margin.
RK4_STABILITY_LIMIT = 2.5


class IntegrationError(RuntimeError):
    """Non-finite state or violated step guard.  Carries the last good state."""

    def __init__(self, message: str, t_fail: float | None = None, last_state: "ClassicalState | None" = None):
        super().__init__(message if t_fail is None else f"{message} (t = {t_fail:.6e} s)")
        self.t_fail = t_fail
        self.last_state = last_state


@dataclass(frozen=True)
class ClassicalState:
    t: float
    q0: float
    p0: float
    alpha: complex = 0j

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.t, self.q0, self.p0, self.alpha.real, self.alpha.imag))

    @property
    def photon_number(self) -> float:
        return abs(self.alpha) ** 2


def initial_state(params: SystemParams, amplitude: float, t: float = 0.0) -> ClassicalState:
    """Membrane displaced by ``amplitude`` from q_s, at rest, empty cavity."""
    return ClassicalState(t=t, q0=params.q_s + amplitude, p0=0.0, alpha=0j)


def default_dt(params: SystemParams, scales: DerivedScales) -> float:
    """Largest step that resolves the cavity pole and keeps RK4 stable on the detuning."""
    fast = max_abs_detuning(params, scales)
    # r_c = 0 leaves no position dependence and therefore no detuning bound
    return 0.01 / params.kappa if fast == 0 else min(0.01 / params.kappa, 0.4 / fast)


@dataclass(frozen=True)
class IntegrationConfig:
    """Fixed-step settings.  ``dt = None`` resolves to :func:`default_dt`."""

    duration: float
    dt: float | None = None
    sample_stride: int = 32
    stiffness_guard: float = 0.02

    def resolve(self, params: SystemParams, scales: DerivedScales) -> "IntegrationConfig":
        cfg = self if self.dt is not None else replace(self, dt=default_dt(params, scales))
        cfg.check(params, scales)
        return cfg

    def check(self, params: SystemParams, scales: DerivedScales) -> None:
        if self.dt is None or not (math.isfinite(self.dt) and self.dt > 0):
            raise IntegrationError(f"dt must be finite and > 0, got {self.dt!r}")
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise IntegrationError(f"duration must be finite and >= 0, got {self.duration!r}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise IntegrationError(f"sample_stride must be a positive integer, got {self.sample_stride!r}")
        if params.kappa * self.dt > self.stiffness_guard:
            raise IntegrationError(
                f"kappa*dt = {params.kappa * self.dt:.3g} exceeds stiffness guard {self.stiffness_guard}")
        fast = max_abs_detuning(params, scales) * self.dt
        if fast > RK4_STABILITY_LIMIT:
            raise IntegrationError(
                f"dt*max|Delta| = {fast:.3g} exceeds RK4 stability limit {RK4_STABILITY_LIMIT}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass
class Trajectory:
    """Decimated classical trajectory, SI units, uniform spacing ``dt*sample_stride``."""

    t: np.ndarray
    q0: np.ndarray
    p0: np.ndarray
    alpha: np.ndarray
    params: SystemParams
    config: IntegrationConfig
    final_state: ClassicalState = field(default=None)

    def __len__(self):
        return len(self.t)

    @property
    def photon_number(self) -> np.ndarray:
        return self.alpha.real**2 + self.alpha.imag**2

    @property
    def sample_interval(self) -> float:
        return self.config.dt * self.config.sample_stride

    def state(self, i: int) -> ClassicalState:
        return ClassicalState(float(self.t[i]), float(self.q0[i]), float(self.p0[i]), complex(self.alpha[i]))


def classical_rhs(state: ClassicalState, params: SystemParams, scales: DerivedScales):
    """Time derivatives (dq0/dt, dp0/dt, dalpha/dt) of the mean-field equations."""
    if not state.is_finite():
        raise IntegrationError("non-finite state passed to classical_rhs", state.t)
    _, d1, _ = mode_frequency_jet(state.q0, params.parity, params, scales)
    delta = float(detuning(state.q0, params, scales))
    hbar = scales.constants.hbar
    n = abs(state.alpha) ** 2
    dq = state.p0 / params.mass
    dp = (-hbar * float(d1) * n
          - params.mass * params.omega_m**2 * (state.q0 - params.q_s)
          - params.gamma * state.p0)
    da = -1j * delta * state.alpha - 1j * scales.alpha_L - params.kappa * state.alpha
    return dq, dp, da


def rk4_step(state: ClassicalState, dt: float, rhs) -> ClassicalState:
    """One classical RK4 step of ``rhs(state) -> (dq, dp, dalpha)``."""

    def shift(c, k):
        return ClassicalState(state.t + c, state.q0 + c * k[0], state.p0 + c * k[1], state.alpha + c * k[2])

    k1 = rhs(state)
    k2 = rhs(shift(0.5 * dt, k1))
    k3 = rhs(shift(0.5 * dt, k2))
    k4 = rhs(shift(dt, k3))
    w = dt / 6.0
    new = ClassicalState(
        state.t + dt,
        state.q0 + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        state.p0 + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        state.alpha + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )
    if not new.is_finite():
        raise IntegrationError("non-finite state after RK4 step", state.t, state)
    return new


def simulate(initial: ClassicalState, params: SystemParams, scales: DerivedScales,
             config: IntegrationConfig, *, clamp_membrane: bool = False, backend: str | None = None) -> Trajectory:
    """Integrate the classical equations over ``config.duration``.

    ``clamp_membrane`` freezes (q0, p0) and evolves only the cavity field, which
    is the clamped-membrane setting used by the Lorentzian check.
    """
    cfg = config.resolve(params, scales)
    if not initial.is_finite():
        raise IntegrationError("non-finite initial state", initial.t)
    sc = kernels.Scaling.from_params(params, scales)
    coef = kernels.coefficients(params, scales)
    y0 = sc.to_internal(initial.q0, initial.p0, initial.alpha)
    h = cfg.dt * params.omega_m
    stride = int(cfg.sample_stride)
    mod = kernels.get_backend(backend)
    samples, rec, status, fail_step, last = mod.integrate_classical(y0, h, cfg.n_steps, stride, coef, clamp_membrane)
    samples = samples[:rec]
    t = initial.t + np.arange(rec) * (stride * cfg.dt)
    last_t = initial.t + (cfg.n_steps if status == 0 else fail_step) * cfg.dt
    final = ClassicalState(last_t, float(sc.q0(last[0])), float(sc.p0(last[1])), complex(sc.alpha(last[2], last[3])))
    if status != 0:
        raise IntegrationError("classical integration produced a non-finite state", last_t, final)
    return Trajectory(
        t=t,
        q0=sc.q0(samples[:, 0]),
        p0=sc.p0(samples[:, 1]),
        alpha=sc.alpha(samples[:, 2], samples[:, 3]),
        params=params,
        config=cfg,
        final_state=final,
    )


def clamped_cavity_steady_state(q_fixed: float, params: SystemParams, scales: DerivedScales) -> complex:
    """Fixed point of the cavity equation with the membrane held at ``q_fixed``."""
    delta = float(detuning(q_fixed, params, scales))
    return -1j * scales.alpha_L / (params.kappa + 1j * delta)
