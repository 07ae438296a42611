"""Command-line entry point: ``omsim {simulate,sweep,entangle,validate,plot}``.

Exit codes: 0 success, 1 usage or configuration error, 2 integration or
physics failure, 3 validation failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from omsim import __version__
from omsim.attractors import cluster_amplitudes, run_to_attractor, smallest_attractor, sweep_attractors
from omsim.config import ConfigError, RunConfig, effective_path, load_config, write_effective
from omsim.covariance import CovarianceError, PhysicalityError, cosimulate, initial_covariance
from omsim.dynamics import IntegrationConfig, IntegrationError, initial_state, simulate
from omsim.io import SchemaError, cosim_columns, sweep_columns, trajectory_columns, write_timeseries_csv
from omsim.model import ParameterError, check_single_mode_validity, derive_scales

EXIT_OK, EXIT_USAGE, EXIT_PHYSICS, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flag dest -> dotted config key
_OVERRIDES = {
    "simulate": {"power": "params.power", "init_amplitude_lambda": "simulate.init_amplitude_lambda",
                 "duration_periods": "simulate.duration_periods", "dt": "integration.dt",
                 "sample_stride": "integration.sample_stride"},
    "sweep": {"power_min": "sweep.power_min", "power_max": "sweep.power_max", "power_steps": "sweep.power_steps",
              "ic_min_lambda": "sweep.ic_min_lambda", "ic_max_lambda": "sweep.ic_max_lambda",
              "ic_steps": "sweep.ic_steps", "workers": "sweep.workers", "dt": "integration.dt"},
    "entangle": {"power": "params.power", "temperature": "entangle.temperature",
                 "init_amplitude_lambda": "entangle.init_amplitude_lambda",
                 "duration_periods": "entangle.duration_periods", "smallest_cycle": "entangle.smallest_cycle",
                 "ic_steps": "sweep.ic_steps", "dt": "entangle.dt", "sample_stride": "entangle.sample_stride"},
    "validate": {},
    "plot": {},
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="omsim", description="Membrane-in-the-middle optomechanics simulator.")
    parser.add_argument("--version", action="version", version=f"omsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, csv=True):
        p.add_argument("--config", metavar="PATH", help="JSON run configuration")
        p.add_argument("--output", "-o", metavar="PATH", help="output file")
        if csv:
            p.add_argument("--stride", type=int, help="write every N-th row")
            p.add_argument("--svg", action="store_true", help="also render the matching figures")

    p = sub.add_parser("simulate", help="one classical trajectory to CSV")
    common(p)
    p.add_argument("--power", type=float, help="drive power (W)")
    p.add_argument("--init-amplitude-lambda", type=float, help="initial displacement from q_s in units of lambda_n")
    p.add_argument("--duration-periods", type=float, help="length in mechanical periods")
    p.add_argument("--dt", type=float, help="time step (s)")
    p.add_argument("--sample-stride", type=int, help="record every N-th step")

    p = sub.add_parser("sweep", help="attractor diagram over power and initial amplitude")
    common(p)
    p.add_argument("--power-min", type=float)
    p.add_argument("--power-max", type=float)
    p.add_argument("--power-steps", type=int)
    p.add_argument("--ic-min-lambda", type=float)
    p.add_argument("--ic-max-lambda", type=float)
    p.add_argument("--ic-steps", type=int)
    p.add_argument("--workers", type=int, help="worker processes (capped by OMSIM_THREADS)")
    p.add_argument("--dt", type=float, help="time step (s)")

    p = sub.add_parser("entangle", help="classical orbit plus covariance, log-negativity to CSV")
    common(p)
    p.add_argument("--power", type=float)
    p.add_argument("--temperature", type=float, help="bath temperature (K)")
    p.add_argument("--init-amplitude-lambda", type=float)
    p.add_argument("--duration-periods", type=float)
    p.add_argument("--ic-steps", type=int, help="initial amplitudes tried when searching the smallest cycle")
    p.add_argument("--smallest-cycle", dest="smallest_cycle", action="store_true", default=None)
    p.add_argument("--no-smallest-cycle", dest="smallest_cycle", action="store_false")
    p.add_argument("--dt", type=float, help="time step (s)")
    p.add_argument("--sample-stride", type=int)

    p = sub.add_parser("validate", help="run the built-in oracle checks")
    p.add_argument("--config", metavar="PATH")

    p = sub.add_parser("plot", help="render an SVG figure from CSV output")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--figure", type=int, required=True, choices=(2, 3, 4, 5, 6, 7))
    p.add_argument("--input", metavar="CSV", help="CSV from simulate, sweep or entangle")
    p.add_argument("--output", "-o", metavar="PATH", required=True)
    return parser


def _load(args) -> RunConfig:
    overrides = {}
    for dest, key in _OVERRIDES[args.command].items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "stride", None) is not None:
        overrides["output.stride"] = args.stride
    if getattr(args, "svg", False):
        overrides["output.svg"] = True
    return load_config(args.config, overrides)


def _output_path(args, cfg: RunConfig, default_name: str) -> Path:
    return Path(args.output) if args.output else Path(cfg.output.directory) / default_name


def _echo(args, cfg, out: Path):
    # with --config the loader already wrote the echo next to the config file
    if args.config is None:
        write_effective(cfg, effective_path(out.with_suffix(".json")))


def _figures(cfg, ids, csv_path: Path):
    from omsim.figures import render_figure

    for fid in ids:
        render_figure(fid, cfg.params, csv_path.with_name(f"{csv_path.stem}_fig{fid}.svg"), csv_path, cfg.constants)


def cmd_simulate(args, cfg: RunConfig) -> int:
    params = cfg.params
    scales = derive_scales(params, cfg.constants)
    report = check_single_mode_validity(params, scales)
    if report.status != "PASS":
        print(f"warning: {report.message}", file=sys.stderr)
    start = initial_state(params, cfg.simulate.init_amplitude_lambda * params.wavelength)
    traj = simulate(start, params, scales, cfg.integration_config(cfg.simulate.duration_periods * params.mechanical_period))
    out = _output_path(args, cfg, "simulate.csv")
    write_timeseries_csv(out, trajectory_columns(traj), stride=cfg.output.stride, select=cfg.output.columns)
    _echo(args, cfg, out)
    if cfg.output.svg:
        _figures(cfg, (3, 5), out)
    print(f"wrote {len(traj)} samples to {out}")
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    params = cfg.params
    lam = params.wavelength
    ics = [a * lam for a in cfg.sweep.ic_grid_lambda()]
    records = sweep_attractors(cfg.sweep.power_grid(), ics, params, cfg.run_policy, dt=cfg.integration.dt,
                               workers=cfg.sweep.workers, constants=cfg.constants)
    out = _output_path(args, cfg, "sweep.csv")
    write_timeseries_csv(out, sweep_columns(records), stride=cfg.output.stride, select=cfg.output.columns)
    _echo(args, cfg, out)
    if cfg.output.svg:
        _figures(cfg, (4,), out)
    for power, clusters in cluster_amplitudes(records, cfg.sweep.cluster_epsilon_lambda * lam):
        centers = ", ".join(f"{c.center / lam:.4f}({c.count})" for c in clusters)
        print(f"P = {power:.6g} W: A_bar/lambda_n = {centers or '-'}")
    failed = [r for r in records if r.error]
    for r in failed:
        print(f"failed: P = {r.power:.6g} W, A0 = {r.initial_amplitude / lam:.4g} lambda_n: {r.error}", file=sys.stderr)
    return EXIT_PHYSICS if len(failed) == len(records) else EXIT_OK


def cmd_entangle(args, cfg: RunConfig) -> int:
    params = cfg.entangle_params()
    scales = derive_scales(params, cfg.constants)
    lam = params.wavelength
    ent = cfg.entangle
    if ent.smallest_cycle:
        ics = [a * lam for a in cfg.sweep.ic_grid_lambda()]
        records = sweep_attractors([params.power], ics, params, cfg.run_policy, dt=cfg.integration.dt,
                                   workers=cfg.sweep.workers, constants=cfg.constants)
        rec = smallest_attractor(records)
        if rec is None:
            print("error: no converged limit cycle found on the initial-amplitude grid", file=sys.stderr)
            return EXIT_PHYSICS
    else:
        rec = run_to_attractor(ent.init_amplitude_lambda * lam, params.power, params, cfg.run_policy,
                               dt=cfg.integration.dt, constants=cfg.constants)
    print(f"orbit: A_bar = {rec.stats.A_bar / lam:.6f} lambda_n (start {rec.initial_amplitude / lam:.4g} lambda_n, "
          f"converged={rec.stats.converged})")
    start = replace(rec.final_state, t=0.0)
    config = IntegrationConfig(duration=ent.duration_periods * params.mechanical_period, dt=ent.dt,
                               sample_stride=ent.sample_stride, stiffness_guard=cfg.integration.stiffness_guard)
    out = _output_path(args, cfg, "entangle.csv")
    try:
        res = cosimulate(start, initial_covariance(scales), params, scales, config)
    except PhysicalityError as exc:
        if exc.result is not None:
            write_timeseries_csv(out, cosim_columns(exc.result), stride=cfg.output.stride, select=cfg.output.columns)
        raise
    write_timeseries_csv(out, cosim_columns(res), stride=cfg.output.stride, select=cfg.output.columns)
    _echo(args, cfg, out)
    if cfg.output.svg:
        _figures(cfg, (6, 7), out)
    print(f"wrote {len(res.t)} samples to {out}; max E_N = {res.E_N.max():.6g}, min nu_minus = {res.nu_minus.min():.12f}")
    return EXIT_OK


def cmd_validate(args, cfg: RunConfig) -> int:
    from omsim.validation import format_table, run_validation

    checks = run_validation(cfg.params)
    print(format_table(checks))
    ok = all(c.passed for c in checks)
    print("all checks passed" if ok else "VALIDATION FAILED")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_plot(args, cfg: RunConfig) -> int:
    from omsim.figures import render_figure

    if args.figure != 2 and args.input is None:
        raise UsageError(f"figure {args.figure} needs --input")
    path = render_figure(args.figure, cfg.params, args.output, args.input, cfg.constants)
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "entangle": cmd_entangle,
            "validate": cmd_validate, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ParameterError, UsageError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, PhysicalityError, CovarianceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
