"""Cavity-mode frequency landscape of a membrane-in-the-middle cavity.

A partially reflecting membrane at position ``q`` splits each longitudinal
cavity mode into an even and an odd branch whose frequencies are periodic in
``q`` with period ``lambda_n / 2``.  This module evaluates those branches and
their analytic derivatives, the drive detuning, the derived scales used by the
dynamics (zero-point spreads, drive amplitude, thermal occupation) and the
single-mode validity check.

All functions are pure and accept numpy arrays for the position argument.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

FOUR_PI = 4.0 * math.pi


class ParameterError(ValueError):
    """Invalid physical parameter. ``field`` names the offending attribute."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class ModeParity(str, Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def sign(self) -> float:
        # even branch carries +asin(...), odd branch -asin(...)
        return 1.0 if self is ModeParity.EVEN else -1.0


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34
    k_B: float = 1.380649e-23
    c: float = 299792458.0

    def __post_init__(self):
        for name in ("hbar", "k_B", "c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(name, f"must be finite and > 0, got {value!r}")


RESONANT_AT_QS = "resonant-at-q_s"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of one run, SI units throughout.

    Defaults reproduce the membrane setup studied here: a 100 kHz membrane of
    50 fg in a 6 cm cavity driven on the odd mode of order 60000.

    ``q_s`` defaults to ``lambda_n / 8`` and ``gamma`` to ``1e-2 * omega_m``
    when left as ``None``.  ``omega_l = None`` selects the resonant drive rule
    ``omega_l = omega_c(q_s)``.
    """

    omega_m: float = 2.0 * math.pi * 1e5
    mass: float = 5e-14
    gamma: float | None = None
    r_c: float = 0.8
    cavity_length: float = 0.06
    mode_order: int = 60000
    parity: ModeParity = ModeParity.ODD
    kappa: float | None = None
    q_s: float | None = None
    power: float = 0.21
    temperature: float = 1e-3
    omega_l: float | None = None

    def __post_init__(self):
        # resolve the defaults that depend on other fields
        if self.gamma is None:
            object.__setattr__(self, "gamma", 1e-2 * self.omega_m)
        if self.kappa is None:
            object.__setattr__(self, "kappa", 50.0 * self.omega_m)
        if not isinstance(self.parity, ModeParity):
            try:
                object.__setattr__(self, "parity", ModeParity(self.parity))
            except ValueError:
                raise ParameterError("parity", f"must be 'even' or 'odd', got {self.parity!r}") from None
        if isinstance(self.mode_order, bool) or int(self.mode_order) != self.mode_order or self.mode_order < 1:
            raise ParameterError("mode_order", f"must be a positive integer, got {self.mode_order!r}")
        object.__setattr__(self, "mode_order", int(self.mode_order))
        for name in ("omega_m", "mass", "kappa", "cavity_length"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(name, f"must be finite and > 0, got {value!r}")
        for name in ("gamma", "temperature", "power"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(name, f"must be finite and >= 0, got {value!r}")
        if not (0.0 <= self.r_c < 1.0):
            raise ParameterError("r_c", f"must satisfy 0 <= r_c < 1, got {self.r_c!r}")
        if self.q_s is None:
            object.__setattr__(self, "q_s", self.wavelength / 8.0)
        elif not math.isfinite(self.q_s):
            raise ParameterError("q_s", f"must be finite, got {self.q_s!r}")
        if self.omega_l is not None and not (math.isfinite(self.omega_l) and self.omega_l > 0):
            raise ParameterError("omega_l", f"must be finite and > 0, got {self.omega_l!r}")
        if self.temperature > 0:
            if self.gamma == 0 or self.omega_m / self.gamma < 10.0:
                raise ParameterError(
                    "gamma",
                    "mechanical quality omega_m/gamma must be >= 10 at nonzero temperature "
                    "(Markovian thermal noise)",
                )

    @property
    def wavelength(self) -> float:
        return self.cavity_length / self.mode_order

    @property
    def drive_frequency_rule(self) -> str:
        return RESONANT_AT_QS if self.omega_l is None else EXPLICIT

    @property
    def mechanical_period(self) -> float:
        return 2.0 * math.pi / self.omega_m


@dataclass(frozen=True)
class DerivedScales:
    lambda_n: float
    omega_n: float
    q_z: float
    p_z: float
    alpha_L: float
    n_th: float
    omega_l: float
    # constant part of the detuning: Delta(q) = sign*(c/L)*asin(r_c cos theta) + detuning_offset
    detuning_offset: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)


def _theta(q, wavelength):
    return FOUR_PI * np.asarray(q, dtype=float) / wavelength


def _asin_term(q, params: SystemParams):
    return np.arcsin(params.r_c * np.cos(_theta(q, params.wavelength)))


def mode_frequency_offset(q, parity: ModeParity, params: SystemParams, constants: PhysicalConstants | None = None):
    """``omega_c(q) - omega_n`` evaluated without forming the ~1e15 rad/s carrier."""
    constants = constants or PhysicalConstants()
    parity = ModeParity(parity)
    c_L = constants.c / params.cavity_length
    f = _asin_term(q, params)
    base = -c_L * math.asin(params.r_c)
    if parity is ModeParity.ODD:
        return base + math.pi * c_L - c_L * f
    return base + c_L * f


def mode_frequency_jet(q, parity: ModeParity, params: SystemParams, scales: DerivedScales):
    """Mode frequency and its first two position derivatives.

    Returns
    -------
    omega_c, d1, d2
        ``omega_c(q)`` in rad/s, ``d omega_c/dq`` in rad/(s m) and
        ``d^2 omega_c/dq^2`` in rad/(s m^2).
    """
    parity = ModeParity(parity)
    constants = scales.constants
    c_L = constants.c / params.cavity_length
    s = params.r_c
    k = FOUR_PI / params.wavelength
    theta = _theta(q, params.wavelength)
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    root = np.sqrt(1.0 - s * s * cos_t * cos_t)
    df = -s * k * sin_t / root
    d2f = -s * k * k * (1.0 - s * s) * cos_t / root**3
    sign = parity.sign
    omega = scales.omega_n + mode_frequency_offset(q, parity, params, constants)
    return omega, sign * c_L * df, sign * c_L * d2f


def detuning(q, params: SystemParams, scales: DerivedScales):
    """``omega_c(q0) - omega_l`` in rad/s, in cancelled form.

    For the resonant drive rule the constant carrier terms cancel analytically
    and only the difference of the two ``asin`` terms is evaluated.
    """
    c_L = scales.constants.c / params.cavity_length
    return params.parity.sign * c_L * _asin_term(q, params) + scales.detuning_offset


def max_abs_detuning(params: SystemParams, scales: DerivedScales) -> float:
    """Upper bound of ``|Delta(q)|`` over all membrane positions."""
    c_L = scales.constants.c / params.cavity_length
    return abs(scales.detuning_offset) + c_L * math.asin(params.r_c)


def derive_scales(params: SystemParams, constants: PhysicalConstants | None = None) -> DerivedScales:
    constants = constants or PhysicalConstants()
    hbar = constants.hbar
    lam = params.wavelength
    c_L = constants.c / params.cavity_length
    omega_n = 2.0 * params.mode_order * math.pi * c_L
    sign = params.parity.sign

    if params.omega_l is None:
        theta_s = FOUR_PI * params.q_s / lam
        asin_s = math.asin(params.r_c * math.cos(theta_s))
        offset = -sign * c_L * asin_s
        omega_l = omega_n + float(mode_frequency_offset(params.q_s, params.parity, params, constants))
    else:
        omega_l = params.omega_l
        carrier = omega_n - c_L * math.asin(params.r_c)
        if params.parity is ModeParity.ODD:
            carrier += math.pi * c_L
        offset = carrier - omega_l

    q_z = math.sqrt(hbar / (params.mass * params.omega_m))
    p_z = math.sqrt(hbar * params.mass * params.omega_m)
    alpha_L = math.sqrt(2.0 * params.kappa * params.power / (hbar * omega_l))
    if params.temperature > 0:
        n_th = 1.0 / math.expm1(hbar * params.omega_m / (constants.k_B * params.temperature))
    else:
        n_th = 0.0
    return DerivedScales(
        lambda_n=lam,
        omega_n=omega_n,
        q_z=q_z,
        p_z=p_z,
        alpha_L=alpha_L,
        n_th=n_th,
        omega_l=omega_l,
        detuning_offset=offset,
        constants=constants,
    )


@dataclass(frozen=True)
class ValidityReport:
    gap: float
    ratio: float
    status: str
    drive_in_band: bool
    message: str


WARN_RATIO = 0.01
ERROR_RATIO = 0.1


def check_single_mode_validity(params: SystemParams, scales: DerivedScales) -> ValidityReport:
    """Compare kappa with the smallest gap to the neighbouring cavity modes."""
    c_L = scales.constants.c / params.cavity_length
    gap = math.pi * c_L - 2.0 * c_L * math.asin(params.r_c)
    ratio = params.kappa / gap
    if ratio > ERROR_RATIO:
        status = "ERROR"
    elif ratio > WARN_RATIO:
        status = "WARNING"
    else:
        status = "PASS"
    # drive must sit inside the swept band of the selected branch
    lo = min(float(mode_frequency_offset(0.0, params.parity, params, scales.constants)),
             float(mode_frequency_offset(params.wavelength / 4, params.parity, params, scales.constants)))
    hi = max(float(mode_frequency_offset(0.0, params.parity, params, scales.constants)),
             float(mode_frequency_offset(params.wavelength / 4, params.parity, params, scales.constants)))
    drive = scales.omega_l - scales.omega_n
    in_band = lo - 1.0 <= drive <= hi + 1.0
    message = f"kappa/gap = {ratio:.3e} ({status}); drive {'inside' if in_band else 'outside'} mode band"
    return ValidityReport(gap=gap, ratio=ratio, status=status, drive_in_band=in_band, message=message)
