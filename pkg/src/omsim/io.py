"""Deterministic CSV export and import.

Floats are written with 17 significant digits in scientific notation, so a
value read back is bit-identical to the one written.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

SIMULATE_COLUMNS = ("t", "q0", "p0", "re_alpha", "im_alpha", "photon_number")
SWEEP_COLUMNS = ("power_W", "init_amplitude_m", "A_min_m", "A_max_m", "A_bar_m", "converged")
ENTANGLE_COLUMNS = ("t", "q0", "p0", "photon_number", "E_N", "eta_minus", "nu_minus")


class SchemaError(ValueError):
    pass


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.16e}"


def write_timeseries_csv(path, columns: dict, *, stride: int = 1, select=None) -> Path:
    """Write equal-length columns as CSV, keeping every ``stride``-th row from the first.

    ``select`` restricts and orders the columns; by default all are written in
    insertion order.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    names = list(select) if select is not None else list(columns)
    missing = [n for n in names if n not in columns]
    if missing:
        raise SchemaError(f"unknown column(s) {missing}; available {list(columns)}")
    data = [np.asarray(columns[n]) for n in names]
    lengths = {len(d) for d in data}
    if len(lengths) != 1:
        raise SchemaError(f"columns differ in length: {sorted(lengths)}")
    n_rows = lengths.pop()
    if n_rows == 0:
        raise SchemaError("no rows to write")
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(0, n_rows, stride):
            fh.write(",".join(format_value(d[i]) for d in data) + "\n")
    return path


def read_csv(path, required=None) -> dict[str, np.ndarray]:
    """Read a CSV written by :func:`write_timeseries_csv` into float columns."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if not body:
        raise SchemaError(f"{path}: header only, no data rows")
    if required is not None:
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}")
    try:
        arr = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if arr.shape[1] != len(header):
        raise SchemaError(f"{path}: ragged rows")
    return {name: arr[:, j] for j, name in enumerate(header)}


def trajectory_columns(traj) -> dict:
    return {
        "t": traj.t,
        "q0": traj.q0,
        "p0": traj.p0,
        "re_alpha": traj.alpha.real,
        "im_alpha": traj.alpha.imag,
        "photon_number": traj.photon_number,
    }


def sweep_columns(records) -> dict:
    def stat(r, name):
        return getattr(r.stats, name) if r.stats is not None else float("nan")

    return {
        "power_W": [r.power for r in records],
        "init_amplitude_m": [r.initial_amplitude for r in records],
        "A_min_m": [stat(r, "A_min") for r in records],
        "A_max_m": [stat(r, "A_max") for r in records],
        "A_bar_m": [stat(r, "A_bar") for r in records],
        "converged": [bool(r.converged) for r in records],
    }


def cosim_columns(res) -> dict:
    return {
        "t": res.t,
        "q0": res.q0,
        "p0": res.p0,
        "photon_number": res.photon_number,
        "E_N": res.E_N,
        "eta_minus": res.eta_minus,
        "nu_minus": res.nu_minus,
    }
