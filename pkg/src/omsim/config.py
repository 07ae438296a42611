"""JSON run configuration: strict loading, defaults, and the effective-config echo.

Every key is optional; unknown keys are rejected.  Errors name the offending
field by its dotted path (``params.r_c``).  See ``schema/runconfig.md``.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from omsim.attractors import CLUSTER_EPS_FRACTION, RunPolicy
from omsim.covariance import default_cosim_dt
from omsim.dynamics import IntegrationConfig, IntegrationError, default_dt
from omsim.model import (
    EXPLICIT,
    RESONANT_AT_QS,
    ParameterError,
    PhysicalConstants,
    SystemParams,
    derive_scales,
)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class IntegrationSection:
    dt: float | None = None
    sample_stride: int = 32
    stiffness_guard: float = 0.02


@dataclass(frozen=True)
class SimulateSection:
    init_amplitude_lambda: float = 0.3
    duration_periods: float = 300.0


@dataclass(frozen=True)
class SweepSection:
    power_min: float = 0.005
    power_max: float = 0.30
    power_steps: int = 60
    ic_min_lambda: float = 0.05
    ic_max_lambda: float = 3.0
    ic_steps: int = 12
    cluster_epsilon_lambda: float = CLUSTER_EPS_FRACTION
    workers: int | None = None

    def power_grid(self) -> list[float]:
        return _linspace(self.power_min, self.power_max, self.power_steps)

    def ic_grid_lambda(self) -> list[float]:
        return _linspace(self.ic_min_lambda, self.ic_max_lambda, self.ic_steps)


@dataclass(frozen=True)
class EntangleSection:
    temperature: float | None = None
    smallest_cycle: bool = True
    init_amplitude_lambda: float = 0.05
    duration_periods: float = 2.0
    dt: float | None = None
    sample_stride: int = 32


@dataclass(frozen=True)
class OutputSection:
    directory: str = "."
    stride: int = 1
    columns: list | None = None
    svg: bool = False


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams = field(default_factory=SystemParams)
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    integration: IntegrationSection = field(default_factory=IntegrationSection)
    run_policy: RunPolicy = field(default_factory=RunPolicy)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    entangle: EntangleSection = field(default_factory=EntangleSection)
    output: OutputSection = field(default_factory=OutputSection)

    def integration_config(self, duration: float) -> IntegrationConfig:
        return IntegrationConfig(duration=duration, dt=self.integration.dt,
                                 sample_stride=self.integration.sample_stride,
                                 stiffness_guard=self.integration.stiffness_guard)

    def entangle_params(self) -> SystemParams:
        if self.entangle.temperature is None:
            return self.params
        return replace(self.params, temperature=self.entangle.temperature)


def _linspace(a, b, n):
    if n == 1:
        return [float(a)]
    return [a + (b - a) * i / (n - 1) for i in range(n)]


# ---- raw-value checks -------------------------------------------------------

def _number(path, v, *, nullable=False):
    if v is None and nullable:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(path, f"must be finite, got {v!r}")
    return v


def _integer(path, v, *, nullable=False, minimum=None):
    if v is None and nullable:
        return None
    if isinstance(v, bool) or not (isinstance(v, int) or (isinstance(v, float) and v.is_integer())):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {v}")
    return v


def _boolean(path, v):
    if not isinstance(v, bool):
        raise ConfigError(path, f"expected true or false, got {v!r}")
    return v


def _string(path, v, choices=None):
    if not isinstance(v, str):
        raise ConfigError(path, f"expected a string, got {v!r}")
    if choices is not None and v not in choices:
        raise ConfigError(path, f"must be one of {sorted(choices)}, got {v!r}")
    return v


def _section(path, raw, keys):
    """Check ``raw`` against ``keys = {key: converter}`` and convert present keys."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(path, f"expected an object, got {type(raw).__name__}")
    unknown = sorted(set(raw) - set(keys))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    return {k: keys[k](f"{path}.{k}" if path else k, v) for k, v in raw.items()}


def _positive(conv):
    def check(path, v):
        v = conv(path, v)
        if v is not None and not v > 0:
            raise ConfigError(path, f"must be > 0, got {v!r}")
        return v
    return check


def _nonneg(conv):
    def check(path, v):
        v = conv(path, v)
        if v is not None and v < 0:
            raise ConfigError(path, f"must be >= 0, got {v!r}")
        return v
    return check


_num = _number
_opt_num = lambda p, v: _number(p, v, nullable=True)


def _columns(path, v):
    if v is None:
        return None
    if not isinstance(v, list) or not all(isinstance(c, str) for c in v) or not v:
        raise ConfigError(path, "expected a nonempty list of column names or null")
    return list(v)


_PARAM_KEYS = {
    "omega_m": _num, "mass": _num, "gamma": _opt_num, "r_c": _num, "cavity_length": _num,
    "mode_order": lambda p, v: _integer(p, v),
    "parity": lambda p, v: _string(p, v, {"even", "odd"}),
    "kappa": _opt_num, "q_s": _opt_num, "power": _num, "temperature": _num, "omega_l": _opt_num,
    "drive_frequency_rule": lambda p, v: _string(p, v, {RESONANT_AT_QS, EXPLICIT}),
}


def _build_params(raw, constants: PhysicalConstants) -> SystemParams:
    values = _section("params", raw, _PARAM_KEYS)
    rule = values.pop("drive_frequency_rule", None)
    if rule == RESONANT_AT_QS and values.get("omega_l") is not None:
        raise ConfigError("params.omega_l", f"must be null when drive_frequency_rule is {RESONANT_AT_QS!r}")
    if rule == EXPLICIT and values.get("omega_l") is None:
        raise ConfigError("params.omega_l", "required when drive_frequency_rule is 'explicit'")
    try:
        params = SystemParams(**values)
        derive_scales(params, constants)
    except ParameterError as exc:
        raise ConfigError(f"params.{exc.field}", exc.message) from None
    return params


def _build_constants(raw) -> PhysicalConstants:
    values = _section("constants", raw, {"hbar": _num, "k_B": _num, "c": _num})
    try:
        return PhysicalConstants(**values)
    except ParameterError as exc:
        raise ConfigError(f"constants.{exc.field}", exc.message) from None


def build_config(raw: dict) -> RunConfig:
    """Validate a decoded JSON object and resolve every default."""
    top = _section("", raw, {k: (lambda p, v: v) for k in (f.name for f in fields(RunConfig))})
    constants = _build_constants(top.get("constants"))
    params = _build_params(top.get("params"), constants)
    scales = derive_scales(params, constants)

    integ = IntegrationSection(**_section("integration", top.get("integration"), {
        "dt": _positive(_opt_num),
        "sample_stride": lambda p, v: _integer(p, v, minimum=1),
        "stiffness_guard": _positive(_num),
    }))
    if integ.dt is None:
        integ = replace(integ, dt=default_dt(params, scales))
    try:
        IntegrationConfig(duration=0.0, dt=integ.dt, sample_stride=integ.sample_stride,
                          stiffness_guard=integ.stiffness_guard).check(params, scales)
    except IntegrationError as exc:
        raise ConfigError("integration.dt", str(exc)) from None

    pol_raw = _section("run_policy", top.get("run_policy"), {
        "relax_periods": _nonneg(_num),
        "window_periods": lambda p, v: _integer(p, v, minimum=2),
        "max_extensions": lambda p, v: _integer(p, v, minimum=0),
        "extension_periods": _positive(_num),
    })
    policy = RunPolicy(**pol_raw)

    sim = SimulateSection(**_section("simulate", top.get("simulate"), {
        "init_amplitude_lambda": _num,
        "duration_periods": _nonneg(_num),
    }))

    sw = SweepSection(**_section("sweep", top.get("sweep"), {
        "power_min": _nonneg(_num), "power_max": _nonneg(_num),
        "power_steps": lambda p, v: _integer(p, v, minimum=1),
        "ic_min_lambda": _num, "ic_max_lambda": _num,
        "ic_steps": lambda p, v: _integer(p, v, minimum=1),
        "cluster_epsilon_lambda": _positive(_num),
        "workers": lambda p, v: _integer(p, v, nullable=True, minimum=1),
    }))
    if sw.power_max < sw.power_min:
        raise ConfigError("sweep.power_max", "must be >= sweep.power_min")
    if sw.ic_max_lambda < sw.ic_min_lambda:
        raise ConfigError("sweep.ic_max_lambda", "must be >= sweep.ic_min_lambda")

    ent = EntangleSection(**_section("entangle", top.get("entangle"), {
        "temperature": _nonneg(_opt_num),
        "smallest_cycle": _boolean,
        "init_amplitude_lambda": _num,
        "duration_periods": _nonneg(_num),
        "dt": _positive(_opt_num),
        "sample_stride": lambda p, v: _integer(p, v, minimum=1),
    }))
    if ent.temperature is not None:
        try:
            replace(params, temperature=ent.temperature)
        except ParameterError as exc:
            raise ConfigError("entangle.temperature", exc.message) from None
    if ent.dt is None:
        ent = replace(ent, dt=default_cosim_dt(params, scales))

    out = OutputSection(**_section("output", top.get("output"), {
        "directory": lambda p, v: _string(p, v),
        "stride": lambda p, v: _integer(p, v, minimum=1),
        "columns": _columns,
        "svg": _boolean,
    }))
    return RunConfig(params, constants, integ, policy, sim, sw, ent, out)


def config_to_dict(cfg: RunConfig) -> dict:
    """Plain-JSON form of a resolved config; ``build_config`` of it gives ``cfg`` back."""
    params = asdict(cfg.params)
    params["parity"] = cfg.params.parity.value
    params["drive_frequency_rule"] = cfg.params.drive_frequency_rule
    return {
        "params": params,
        "constants": asdict(cfg.constants),
        "integration": asdict(cfg.integration),
        "run_policy": asdict(cfg.run_policy),
        "simulate": asdict(cfg.simulate),
        "sweep": asdict(cfg.sweep),
        "entangle": asdict(cfg.entangle),
        "output": asdict(cfg.output),
    }


def effective_path(path: str | os.PathLike) -> Path:
    p = Path(path)
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    return p.with_name(stem + ".effective.json")


def write_effective(cfg: RunConfig, path: str | os.PathLike) -> Path:
    out = Path(path)
    out.write_text(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def read_raw(path: str | os.PathLike) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top level must be a JSON object")
    return raw


def merge_overrides(raw: dict, overrides: dict) -> dict:
    """Apply ``{"section.key": value}`` overrides onto a raw config object."""
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for dotted, value in overrides.items():
        section, key = dotted.split(".", 1)
        merged.setdefault(section, {})
        if not isinstance(merged[section], dict):
            raise ConfigError(section, "expected an object")
        merged[section][key] = value
    return merged


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None,
                echo: bool = True) -> RunConfig:
    """Load, validate and resolve a config file; echo it to ``<name>.effective.json``."""
    raw = read_raw(path) if path is not None else {}
    if overrides:
        raw = merge_overrides(raw, overrides)
    cfg = build_config(raw)
    if echo and path is not None:
        write_effective(cfg, effective_path(path))
    return cfg
