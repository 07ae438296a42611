"""SVG renderings of the standard plots, built from CSV outputs.

Figure ids: 2 mode landscape, 3 phase portrait, 4 attractor diagram,
5 photon number vs position, 6 log-negativity vs position, 7 stacked time
series.  Output is byte-stable: no timestamps and a fixed SVG id salt.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from omsim.io import ENTANGLE_COLUMNS, SIMULATE_COLUMNS, SWEEP_COLUMNS, SchemaError, read_csv  # noqa: E402
from omsim.model import ModeParity, PhysicalConstants, SystemParams, mode_frequency_offset  # noqa: E402

FIGURE_IDS = (2, 3, 4, 5, 6, 7)
# which CSV schema each figure reads; figure 2 is computed from parameters alone
FIGURE_INPUT = {2: None, 3: SIMULATE_COLUMNS, 4: SWEEP_COLUMNS, 5: SIMULATE_COLUMNS,
                6: ENTANGLE_COLUMNS, 7: ENTANGLE_COLUMNS}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "omsim", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def figure2(params: SystemParams, path, constants: PhysicalConstants | None = None, n: int = 1601):
    constants = constants or PhysicalConstants()
    lam = params.wavelength
    q = np.linspace(0.0, lam, n)
    fig, ax = plt.subplots(figsize=(6, 4))
    for parity, style in ((ModeParity.EVEN, "-"), (ModeParity.ODD, "--")):
        off = mode_frequency_offset(q, parity, params, constants) / (2 * np.pi * 1e9)
        ax.plot(q / lam, off, style, label=f"{parity.value}")
    ax.set_xlabel(r"$q/\lambda_n$")
    ax.set_ylabel(r"$(\omega_c - \omega_n)/2\pi$ (GHz)")
    ax.legend()
    return _save(fig, path)


def _scaled(data, params):
    lam = params.wavelength
    x = (data["q0"] - params.q_s) / lam
    y = data["p0"] / (params.mass * params.omega_m * lam)
    return x, y


def figure3(data, params: SystemParams, path):
    x, y = _scaled(data, params)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(x, y, lw=0.6)
    ax.set_xlabel(r"$(q_0 - q_s)/\lambda_n$")
    ax.set_ylabel(r"$p_0/(m\omega_m\lambda_n)$")
    ax.set_aspect("equal", adjustable="datalim")
    return _save(fig, path)


def figure4(data, params: SystemParams, path):
    ok = data["converged"] > 0.5
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(data["power_W"][ok], data["A_bar_m"][ok] / params.wavelength, ".", ms=4)
    ax.set_xlabel("P (W)")
    ax.set_ylabel(r"$\bar A/\lambda_n$")
    return _save(fig, path)


def _resonance_lines(ax, x):
    lo, hi = np.floor(4 * x.min()), np.ceil(4 * x.max())
    for k in np.arange(lo, hi + 1):
        ax.axvline(k / 4, color="0.8", lw=0.5, zorder=0)


def figure5(data, params: SystemParams, path):
    x, _ = _scaled(data, params)
    fig, ax = plt.subplots(figsize=(6, 4))
    _resonance_lines(ax, x)
    ax.plot(x, data["photon_number"], lw=0.6)
    ax.set_xlabel(r"$(q_0 - q_s)/\lambda_n$")
    ax.set_ylabel(r"$|\alpha|^2$")
    return _save(fig, path)


def figure6(data, params: SystemParams, path):
    x, _ = _scaled(data, params)
    fig, ax = plt.subplots(figsize=(6, 4))
    _resonance_lines(ax, x)
    ax.plot(x, data["E_N"], lw=0.6)
    ax.set_xlabel(r"$(q_0 - q_s)/\lambda_n$")
    ax.set_ylabel(r"$E_N$")
    return _save(fig, path)


def figure7(data, params: SystemParams, path):
    x, y = _scaled(data, params)
    t = (data["t"] - data["t"][0]) / params.mechanical_period
    fig, axes = plt.subplots(4, 1, sharex=True, figsize=(6, 7))
    series = ((x, r"$(q_0-q_s)/\lambda_n$"), (y, r"$p_0/(m\omega_m\lambda_n)$"),
              (data["photon_number"], r"$|\alpha|^2$"), (data["E_N"], r"$E_N$"))
    for ax, (v, label) in zip(axes, series):
        ax.plot(t, v, lw=0.6)
        ax.set_ylabel(label)
    axes[-1].set_xlabel(r"$t/T_m$")
    fig.align_ylabels(axes)
    return _save(fig, path)


_RENDER = {3: figure3, 4: figure4, 5: figure5, 6: figure6, 7: figure7}


def render_figure(figure_id: int, params: SystemParams, path, csv_path=None,
                  constants: PhysicalConstants | None = None) -> Path:
    if figure_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure id {figure_id}; choose from {FIGURE_IDS}")
    if figure_id == 2:
        return figure2(params, path, constants)
    if csv_path is None:
        raise SchemaError(f"figure {figure_id} needs an input CSV")
    data = read_csv(csv_path, required=FIGURE_INPUT[figure_id])
    return _RENDER[figure_id](data, params, path)
