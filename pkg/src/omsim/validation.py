"""Built-in oracle suite run by ``omsim validate``.

Each check compares a computed quantity with an analytic reference and
reports the observed error next to its tolerance.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from omsim.attractors import RunPolicy, energy_balance_from_state, run_to_attractor
from omsim.covariance import cosimulate, initial_covariance, log_negativity, tmsv_covariance
from omsim.dynamics import ClassicalState, IntegrationConfig, default_dt, initial_state, simulate
from omsim.model import (
    ModeParity,
    PhysicalConstants,
    SystemParams,
    derive_scales,
    detuning,
    mode_frequency_jet,
    mode_frequency_offset,
)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def five_point(f, x, h):
    """Central 5-point first and second derivatives of ``f`` at ``x``."""
    fm2, fm1, f0, fp1, fp2 = (f(x + k * h) for k in (-2, -1, 0, 1, 2))
    d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    return d1, d2


def check_periodicity(params: SystemParams, n: int = 1000) -> float:
    """Worst ``|w(q + lambda/2) - w(q)| / (1e-9 |w - w_n| + 1e-3)`` over both parities; pass at <= 1."""
    lam = params.wavelength
    q = np.linspace(0.0, lam / 2, n, endpoint=False)
    worst = 0.0
    for parity in ModeParity:
        a = mode_frequency_offset(q, parity, params)
        b = mode_frequency_offset(q + lam / 2, parity, params)
        worst = max(worst, float(np.max(np.abs(b - a) / (1e-9 * np.abs(a) + 1e-3))))
    return worst


def check_parity_sum(params: SystemParams, n: int = 1000) -> float:
    """Spread of (w_e + w_o - 2 w_n) over a period in the same tolerance units as periodicity."""
    lam = params.wavelength
    q = np.linspace(0.0, lam / 2, n, endpoint=False)
    total = mode_frequency_offset(q, "even", params) + mode_frequency_offset(q, "odd", params)
    c_L = PhysicalConstants().c / params.cavity_length
    expected = math.pi * c_L - 2 * c_L * math.asin(params.r_c)
    return float(np.max(np.abs(total - expected) / (1e-9 * abs(expected) + 1e-3)))


def check_derivatives(params: SystemParams, n: int = 1000) -> float:
    """Largest derivative mismatch against 5-point differences, relative to the peak derivative."""
    scales = derive_scales(params)
    lam = params.wavelength
    q = np.linspace(0.0, lam / 2, n, endpoint=False)
    h = lam * 1e-4
    worst = 0.0
    for parity in ModeParity:
        _, d1, d2 = mode_frequency_jet(q, parity, params, scales)
        fd1, fd2 = five_point(lambda x: mode_frequency_offset(x, parity, params), q, h)
        worst = max(worst,
                    float(np.max(np.abs(fd1 - d1)) / np.max(np.abs(d1))),
                    float(np.max(np.abs(fd2 - d2)) / np.max(np.abs(d2))))
    return worst


def check_lorentzian(params: SystemParams, n_points: int = 11, span: float = 10.0) -> float:
    """Clamped-membrane photon number after 20/kappa against alpha_L^2/(kappa^2 + Delta^2)."""
    scales = derive_scales(params)
    lam = params.wavelength
    worst = 0.0
    for m in np.linspace(-span, span, n_points):
        target = m * params.kappa
        if m == 0:
            q = params.q_s
        else:
            q = brentq(lambda x: float(detuning(x, params, scales)) - target,
                       params.q_s - lam / 16, params.q_s + lam / 16, xtol=1e-16 * lam, rtol=1e-15)
        traj = simulate(ClassicalState(0.0, q, 0.0, 0j), params, scales,
                        IntegrationConfig(duration=20.0 / params.kappa), clamp_membrane=True)
        delta = float(detuning(q, params, scales))
        ref = scales.alpha_L**2 / (params.kappa**2 + delta**2)
        worst = max(worst, abs(traj.final_state.photon_number / ref - 1.0))
    return worst


def check_damped_decay(params: SystemParams, amplitude_lambda: float = 0.5, periods: int = 10) -> float:
    """Worst relative deviation of the per-period amplitude peak from d exp(-gamma t/2)."""
    p0 = replace(params, power=0.0)
    scales = derive_scales(p0)
    d = amplitude_lambda * p0.wavelength
    traj = simulate(initial_state(p0, d), p0, scales,
                    IntegrationConfig(duration=periods * p0.mechanical_period, sample_stride=8))
    x = traj.q0 - p0.q_s
    period = p0.mechanical_period
    worst = 0.0
    for j in range(periods):
        sel = (traj.t >= j * period) & (traj.t < (j + 1) * period)
        i = np.argmax(x[sel])
        t_pk = traj.t[sel][i]
        worst = max(worst, abs(x[sel][i] / (d * math.exp(-0.5 * p0.gamma * t_pk)) - 1.0))
    return worst


def check_stationarity(params: SystemParams, gamma_times: float = 50.0) -> float:
    """Undriven co-simulation from thermal x vacuum over gamma_times/gamma; max relative change."""
    p0 = replace(params, power=0.0)
    scales = derive_scales(p0)
    V0 = initial_covariance(scales)
    # the membrane rests at q_s, so the step only has to resolve kappa and the static RK4 bound
    cfg = IntegrationConfig(duration=gamma_times / p0.gamma, dt=0.016 / p0.kappa,
                            sample_stride=1 << 20)
    res = cosimulate(ClassicalState(0.0, p0.q_s, 0.0, 0j), V0, p0, scales, cfg)
    return float(np.max(np.abs(res.final_V - V0)) / np.max(np.abs(V0)))


def check_tmsv() -> float:
    worst = 0.0
    for r in (0.1, 0.5, 1.0):
        e_n, _ = log_negativity(tmsv_covariance(r))
        worst = max(worst, abs(e_n - 2 * r))
    return worst


def check_product_states(params: SystemParams) -> float:
    """E_N of the vacuum and of thermal x vacuum; both must be exactly 0."""
    scales = derive_scales(params)
    return max(log_negativity(np.eye(4) / 2)[0], log_negativity(initial_covariance(scales))[0])


def check_energy_balance(params: SystemParams, power: float = 0.21, amplitude_lambda: float = 0.3) -> float:
    """Relax onto a limit cycle at a 4x coarse step, then balance one cycle at the default step."""
    p = replace(params, power=power)
    scales = derive_scales(p)
    rec = run_to_attractor(amplitude_lambda * p.wavelength, power, p, RunPolicy(max_extensions=0),
                           dt=4 * default_dt(p, scales))
    eb = energy_balance_from_state(rec.final_state, p, scales)
    return eb.relative_error


def run_validation(params: SystemParams | None = None) -> list[Check]:
    params = params or SystemParams()
    suite = [
        ("mode periodicity", lambda: check_periodicity(params), 1.0),
        ("parity sum", lambda: check_parity_sum(params), 1.0),
        ("derivatives vs finite differences", lambda: check_derivatives(params), 1e-6),
        ("Lorentzian steady state", lambda: check_lorentzian(params), 1e-6),
        ("damped decay envelope", lambda: check_damped_decay(params), 1e-2),
        ("covariance stationarity", lambda: check_stationarity(params), 1e-6),
        ("two-mode squeezed log-negativity", check_tmsv, 1e-9),
        ("product states unentangled", lambda: check_product_states(params), 0.0),
        ("limit-cycle energy balance", lambda: check_energy_balance(params), 1e-2),
    ]
    out = []
    for name, fn, tol in suite:
        t0 = time.perf_counter()
        value = float(fn())
        out.append(Check(name, value, tol, time.perf_counter() - t0))
    return out


def format_table(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  {'value':>10}  {'tol':>8}  result"]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {c.value:10.3e}  {c.tolerance:8.1e}  {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
