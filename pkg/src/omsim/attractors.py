"""Limit-cycle statistics, attractor search and multistability sweeps."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.signal import find_peaks

from omsim.dynamics import (
    ClassicalState,
    IntegrationConfig,
    IntegrationError,
    Trajectory,
    initial_state,
    simulate,
)
from omsim.model import DerivedScales, PhysicalConstants, SystemParams, derive_scales, detuning, mode_frequency_jet

DRIFT_TOLERANCE = 1e-3
# an orbit whose largest radius stays below this fraction of lambda_n counts as collapsed
COLLAPSE_FRACTION = 1e-3
CLUSTER_EPS_FRACTION = 0.01
RESONANCE_WINDOW_KAPPA = 5.0
# local maxima closer than this (in units of 1/kappa) are one crossing; the field rings after each one
PEAK_SEPARATION_KAPPA = 8.0
PEAK_FLOOR = 1e-3


@dataclass(frozen=True)
class CycleStats:
    A_min: float
    A_max: float
    A_bar: float
    period_estimate: float
    converged: bool
    drift: float = float("nan")


@dataclass(frozen=True)
class RunPolicy:
    relax_periods: float = 300.0
    window_periods: int = 20
    max_extensions: int = 3
    extension_periods: float = 100.0

    def __post_init__(self):
        if self.relax_periods < 0 or self.window_periods < 2 or self.max_extensions < 0 or self.extension_periods <= 0:
            raise ValueError(f"invalid run policy {self!r}")


@dataclass(frozen=True)
class AttractorRecord:
    power: float
    initial_amplitude: float
    stats: CycleStats | None
    final_state: ClassicalState | None = None
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.stats is not None and self.stats.converged


def phase_space_amplitude(q0, p0, params: SystemParams):
    """Radial distance from (q_s, 0) with momentum scaled by 1/(m omega_m)."""
    dq = np.asarray(q0) - params.q_s
    dp = np.asarray(p0) / (params.mass * params.omega_m)
    return np.hypot(dq, dp)


def average_amplitude(a_min, a_max):
    return math.sqrt(0.5 * (a_min * a_min + a_max * a_max))


def upward_crossings(t: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Times where p changes sign from negative to non-negative, linearly interpolated."""
    idx = np.nonzero((p[:-1] < 0) & (p[1:] >= 0))[0]
    frac = -p[idx] / (p[idx + 1] - p[idx])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def extract_cycle_stats(traj: Trajectory, window_periods: int) -> CycleStats:
    """Amplitude statistics over the last ``window_periods`` mechanical periods."""
    params = traj.params
    nominal = params.mechanical_period
    span = traj.t[-1] - traj.t[0]
    if window_periods * nominal > span + traj.sample_interval * (1 + 1e-9):
        raise ValueError(f"window of {window_periods} periods exceeds trajectory span {span / nominal:.3g} periods")
    t, q, p = traj.t, traj.q0, traj.p0
    r = phase_space_amplitude(q, p, params)
    cross = upward_crossings(t, p)
    t_end = t[-1]
    lam = params.wavelength

    if len(cross) >= window_periods + 1:
        edges = cross[-(window_periods + 1):]
        mask = (t >= edges[0]) & (t <= edges[-1])
        per_cycle = []
        for a, b in zip(edges[:-1], edges[1:]):
            seg = r[(t >= a) & (t <= b)]
            per_cycle.append(average_amplitude(seg.min(), seg.max()))
        per_cycle = np.array(per_cycle)
        period = float(np.mean(np.diff(edges)))
        drift = float((per_cycle.max() - per_cycle.min()) / per_cycle.mean())
    else:
        # fewer oscillations than the window asks for: judge the last window_periods of time
        mask = t >= t_end - window_periods * nominal
        period = float(np.mean(np.diff(cross))) if len(cross) >= 2 else float("nan")
        drift = float("nan")
    rw = r[mask]
    a_min, a_max = float(rw.min()), float(rw.max())
    a_bar = average_amplitude(a_min, a_max)
    collapsed = a_max < COLLAPSE_FRACTION * lam
    converged = bool(collapsed or drift < DRIFT_TOLERANCE)
    return CycleStats(a_min, a_max, a_bar, period, converged, drift)


def run_to_attractor(initial_amplitude: float, power: float, params: SystemParams,
                     policy: RunPolicy | None = None, *, dt: float | None = None, sample_stride: int = 32,
                     start: ClassicalState | None = None, constants: PhysicalConstants | None = None,
                     backend: str | None = None) -> AttractorRecord:
    """Relax from q_s + initial_amplitude (or from ``start``) and summarise the attractor."""
    policy = policy or RunPolicy()
    params = replace(params, power=power)
    scales = derive_scales(params, constants)
    period = params.mechanical_period
    state = start if start is not None else initial_state(params, initial_amplitude)

    relax = IntegrationConfig(duration=policy.relax_periods * period, dt=dt).resolve(params, scales)
    # no samples needed during relaxation
    relax = replace(relax, sample_stride=max(relax.n_steps, 1))
    state = simulate(state, params, scales, relax, backend=backend).final_state

    # a little over window_periods so that window_periods + 1 crossings fit
    window = IntegrationConfig(duration=(policy.window_periods + 1.5) * period, dt=relax.dt,
                               sample_stride=sample_stride)
    traj = simulate(state, params, scales, window, backend=backend)
    stats = extract_cycle_stats(traj, policy.window_periods)
    for _ in range(policy.max_extensions):
        if stats.converged:
            break
        extend = replace(relax, duration=policy.extension_periods * period)
        extend = replace(extend, sample_stride=max(extend.n_steps, 1))
        state = simulate(traj.final_state, params, scales, extend, backend=backend).final_state
        traj = simulate(state, params, scales, window, backend=backend)
        stats = extract_cycle_stats(traj, policy.window_periods)
    return AttractorRecord(power, initial_amplitude, stats, traj.final_state)


def _sweep_item(args):
    power, amp, params, policy, dt, constants, backend = args
    try:
        return run_to_attractor(amp, power, params, policy, dt=dt, constants=constants, backend=backend)
    except (IntegrationError, ValueError) as exc:
        return AttractorRecord(power, amp, None, None, f"{type(exc).__name__}: {exc}")


def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("OMSIM_THREADS", "").strip()
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def sweep_attractors(power_grid, ic_grid, params: SystemParams, policy: RunPolicy | None = None, *,
                     dt: float | None = None, workers: int | None = None,
                     constants: PhysicalConstants | None = None,
                     backend: str | None = None) -> list[AttractorRecord]:
    """One record per (power, initial amplitude), power-major then IC order."""
    power_grid = [float(p) for p in power_grid]
    ic_grid = [float(a) for a in ic_grid]
    if not power_grid or not ic_grid:
        raise ValueError("power and initial-condition grids must be nonempty")
    policy = policy or RunPolicy()
    jobs = [(p, a, params, policy, dt, constants, backend) for p in power_grid for a in ic_grid]
    n = min(worker_count(workers), len(jobs))
    if n == 1:
        return [_sweep_item(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        # map preserves submission order, so output is canonical whatever finishes first
        return list(pool.map(_sweep_item, jobs))


@dataclass(frozen=True)
class Cluster:
    center: float
    count: int
    spread: float


def single_linkage(values, epsilon: float) -> list[Cluster]:
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return []
    breaks = np.nonzero(np.diff(v) > epsilon)[0] + 1
    return [Cluster(float(g.mean()), int(g.size), float(g.max() - g.min())) for g in np.split(v, breaks)]


def cluster_amplitudes(records, epsilon: float) -> list[tuple[float, list[Cluster]]]:
    """Group converged A_bar values per power by single linkage at threshold ``epsilon`` (m)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    by_power: dict[float, list[float]] = {}
    for rec in records:
        by_power.setdefault(rec.power, [])
        if rec.converged:
            by_power[rec.power].append(rec.stats.A_bar)
    return [(p, single_linkage(v, epsilon)) for p, v in sorted(by_power.items())]


def resonance_half_width(params: SystemParams, scales: DerivedScales, multiple: float = RESONANCE_WINDOW_KAPPA) -> float:
    """delta q_res: distance from q_s at which |Delta| reaches ``multiple * kappa``.

    The smaller of the two sides is returned, so the window is conservative
    when the resonance is asymmetric.
    """
    lam = params.wavelength
    target = multiple * params.kappa
    widths = []
    for side in (1.0, -1.0):
        f = lambda d: abs(float(detuning(params.q_s + side * d, params, scales))) - target
        hi = lam / 8
        if f(hi) <= 0:
            widths.append(hi)
            continue
        widths.append(brentq(f, 0.0, hi, xtol=1e-18 * lam, rtol=1e-14))
    return min(widths)


@dataclass(frozen=True)
class ResonancePeak:
    t: float
    q0: float
    photon_number: float
    k: int
    offset: float


def detect_resonance_peaks(traj: Trajectory, params: SystemParams, scales: DerivedScales, *,
                           floor: float = PEAK_FLOOR,
                           separation: float | None = None) -> list[ResonancePeak]:
    """Local maxima of |alpha|^2 above ``floor * max``, tagged with the nearest q_s + k lambda_n/4.

    Maxima closer than ``separation`` (s, default 8/kappa) are merged; the
    highest one represents the crossing.
    """
    dt_s = traj.sample_interval
    if dt_s >= 0.1 / params.kappa:
        raise ValueError(f"sample interval {dt_s:.3e} s too coarse for peak detection (need < 0.1/kappa)")
    n = traj.photon_number
    if n.size < 3 or n.max() <= 0:
        return []
    sep = PEAK_SEPARATION_KAPPA / params.kappa if separation is None else separation
    idx, _ = find_peaks(n, height=floor * n.max(), distance=max(1, int(round(sep / dt_s))))
    quarter = params.wavelength / 4
    out = []
    for i in idx:
        q = float(traj.q0[i])
        k = int(round((q - params.q_s) / quarter))
        out.append(ResonancePeak(float(traj.t[i]), q, float(n[i]), k, q - (params.q_s + k * quarter)))
    return out


@dataclass(frozen=True)
class EnergyBalance:
    work: float
    dissipation: float
    cycle_time: float

    @property
    def relative_error(self) -> float:
        return abs(self.work - self.dissipation) / abs(self.dissipation)


def cycle_energy_balance(traj: Trajectory, scales: DerivedScales) -> EnergyBalance:
    """Radiation-pressure work and viscous loss over the last full oscillation of ``traj``.

    The trajectory should be sampled densely (stride 1 is typical) and cover
    at least two upward zero crossings of p0.
    """
    params = traj.params
    cross_idx = np.nonzero((traj.p0[:-1] < 0) & (traj.p0[1:] >= 0))[0] + 1
    if len(cross_idx) < 2:
        raise ValueError("trajectory holds less than one full oscillation")
    a, b = cross_idx[-2], cross_idx[-1]
    sl = slice(a, b + 1)
    t = traj.t[sl]
    p = traj.p0[sl]
    _, d1, _ = mode_frequency_jet(traj.q0[sl], params.parity, params, scales)
    force = -scales.constants.hbar * d1 * traj.photon_number[sl]
    work = simpson(force * p / params.mass, x=t)
    loss = simpson(params.gamma * p * p / params.mass, x=t)
    return EnergyBalance(float(work), float(loss), float(t[-1] - t[0]))


def energy_balance_from_state(state: ClassicalState, params: SystemParams, scales: DerivedScales,
                              *, periods: float = 2.5, dt: float | None = None,
                              backend: str | None = None) -> EnergyBalance:
    """Integrate ``periods`` mechanical periods at stride 1 from ``state`` and balance the last cycle."""
    cfg = IntegrationConfig(duration=periods * params.mechanical_period, dt=dt, sample_stride=1)
    traj = simulate(state, params, scales, cfg, backend=backend)
    return cycle_energy_balance(traj, scales)


def smallest_attractor(records) -> AttractorRecord | None:
    conv = [r for r in records if r.converged]
    if not conv:
        return None
    return min(conv, key=lambda r: (r.stats.A_bar, r.initial_amplitude))
