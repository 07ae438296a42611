"""Backend selection for the RK4 hot loops and nondimensional coefficients.

The compiled extension ``omsim._ckernels`` is used when importable; otherwise
the pure-Python ``omsim._pykernels`` takes over.  Setting ``OMSIM_PURE_PYTHON=1``
forces the fallback.

Internal units keep every integrated quantity O(1):

* position  ``x = (q0 - q_s) / lambda_n``
* momentum  ``y = p0 / (m omega_m lambda_n)``
* cavity    ``a = alpha / alpha_ref`` with ``alpha_ref = max(alpha_L / kappa, 1)``
* time      ``tau = omega_m t``
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from omsim import _pykernels
from omsim.model import FOUR_PI, DerivedScales, SystemParams

try:
    if os.environ.get("OMSIM_PURE_PYTHON", "").strip() not in ("", "0"):
        raise ImportError("pure-Python backend forced by OMSIM_PURE_PYTHON")
    from omsim import _ckernels as _active
    BACKEND = "cython"
except ImportError:
    _active = _pykernels
    BACKEND = "python"

_BACKENDS = {"python": _pykernels}
try:
    from omsim import _ckernels as _compiled

    _BACKENDS["cython"] = _compiled
except ImportError:
    pass


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    """Kernel module by name; ``None`` gives the one selected at import."""
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}") from None


@dataclass(frozen=True)
class Scaling:
    """Conversion between SI quantities and kernel units."""

    q_s: float
    lam: float
    momentum: float  # m * omega_m * lambda_n
    omega_m: float
    alpha_ref: float

    @classmethod
    def from_params(cls, params: SystemParams, scales: DerivedScales) -> "Scaling":
        return cls(
            q_s=params.q_s,
            lam=scales.lambda_n,
            momentum=params.mass * params.omega_m * scales.lambda_n,
            omega_m=params.omega_m,
            alpha_ref=max(scales.alpha_L / params.kappa, 1.0),
        )

    def to_internal(self, q0, p0, alpha) -> np.ndarray:
        alpha = complex(alpha)
        return np.array([
            (q0 - self.q_s) / self.lam,
            p0 / self.momentum,
            alpha.real / self.alpha_ref,
            alpha.imag / self.alpha_ref,
        ])

    def q0(self, x):
        return self.q_s + np.asarray(x) * self.lam

    def p0(self, y):
        return np.asarray(y) * self.momentum

    def alpha(self, ar, ai):
        return (np.asarray(ar) + 1j * np.asarray(ai)) * self.alpha_ref


def coefficients(params: SystemParams, scales: DerivedScales) -> np.ndarray:
    """Pack the 11 kernel coefficients (see ``_ckernels.Coef``)."""
    const = scales.constants
    wm = params.omega_m
    lam = scales.lambda_n
    s = params.r_c
    sign = params.parity.sign
    c_L = const.c / params.cavity_length
    alpha_ref = max(scales.alpha_L / params.kappa, 1.0)
    k_wave = FOUR_PI / lam
    # d omega_c/dq = -sign * c_L * s * k_wave * w1,  w1 = sin(theta)/sqrt(1 - s^2 cos^2 theta)
    slope1 = -sign * c_L * s * k_wave
    # d2 omega_c/dq2 = -sign * c_L * s * k_wave^2 * (1 - s^2) * w2,  w2 = cos(theta)/(...)^(3/2)
    slope2 = -sign * c_L * s * k_wave * k_wave * (1.0 - s * s)
    force = const.hbar * slope1 * alpha_ref**2 / (params.mass * wm**2 * lam)
    coupling = math.sqrt(2.0) * scales.q_z * slope1 * alpha_ref / wm
    curvature = scales.q_z**2 * slope2 * alpha_ref**2 / wm
    return np.array([
        s,
        FOUR_PI * params.q_s / lam,
        sign * c_L / wm,
        scales.detuning_offset / wm,
        params.gamma / wm,
        params.kappa / wm,
        scales.alpha_L / (alpha_ref * wm),
        force,
        coupling,
        curvature,
        params.gamma * (2.0 * scales.n_th + 1.0) / wm,
    ])
