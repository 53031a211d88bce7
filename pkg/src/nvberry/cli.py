"""``nvberry`` command-line front end.

    nvberry <command> [--config FILE] [--set key=value ...] [--out FILE] [--json] [--seed N]

Commands: berry, ramsey, echo, sensitivity, sweep. Output is CSV (one header
line) or, with ``--json``, one JSON object per line. Exit codes: 0 success,
2 configuration error, 3 physics precondition violated, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, as_dict, parse_config, with_value
from .eigen import GaugeChoice, geometric_phase
from .errors import NumericalError, PhysicsPreconditionError
from .evolution import Method, PropagationConfig, adiabaticity_margin, extract_geometric_phase
from .measurement import (
    ReadoutParams,
    SensitivityParams,
    end_to_end_estimate,
    predicted_phase_std,
    relative_sensitivity,
    relative_uncertainty,
)
from .physics import PhysicalConstants
from .protocols import DecoherenceModel, run_echo, run_ramsey
from .trajectories import SpindleConfig, echo_trajectory, ramsey_trajectory

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_NUMERIC = 0, 2, 3, 4

INPUTS = {
    "berry": ("omega", "theta", "phi0", "m", "gauge", "splitting", "d_over_omega", "dt", "tolerance", "method", "symmetrize"),
    "ramsey": ("omega", "theta", "phi0", "model", "timescale", "retard", "n_r", "c", "readout_mode", "seed", "repetitions"),
    "echo": ("omega", "theta0", "rotations", "model", "timescale", "retard", "n_r", "c", "readout_mode", "seed", "repetitions"),
    "sensitivity": ("omega", "a", "c", "t_total", "t2", "t2star"),
}
OUTPUTS = {
    "berry": ("phase_analytic", "phase_numeric", "difference", "solid_angle", "nonadiabatic_shift", "adiabaticity_margin", "oracle_margin"),
    "ramsey": ("phase_analytic", "population_m0", "coherence_factor", "duration", "phase_mc_mean", "phase_mc_std", "phase_std_predicted", "adiabaticity_margin"),
    "echo": ("phase_analytic", "population_m0", "coherence_factor", "duration", "phase_mc_mean", "phase_mc_std", "phase_std_predicted", "adiabaticity_margin"),
    "sensitivity": ("sequence", "coherence_time", "t_measure", "relative_sensitivity", "relative_uncertainty", "percent_after_t_total"),
}


class StageError(Exception):
    def __init__(self, stage: str, error: Exception):
        super().__init__(f"stage '{stage}' failed: {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (PhysicsPreconditionError, NumericalError, ValueError) as exc:
        raise StageError(name, exc) from exc


def columns(cfg: RunConfig) -> list[str]:
    if cfg.command == "sweep":
        return ["sweep_param", "sweep_value", "command", *INPUTS[cfg.sweep_command], *OUTPUTS[cfg.sweep_command]]
    return ["command", *INPUTS[cfg.command], *OUTPUTS[cfg.command]]


def _echo_inputs(cfg: RunConfig, command: str) -> dict:
    values = as_dict(cfg)
    values["phi0"] = cfg.effective_phi0()
    values["model"], values["timescale"] = cfg.decoherence()
    row = {"command": command}
    row.update({k: values[k] for k in INPUTS[command]})
    return row


def _run_berry(cfg: RunConfig) -> list[dict]:
    phi0 = cfg.effective_phi0()
    spindle = SpindleConfig(omega=cfg.omega, nv_theta=cfg.theta)
    traj = _stage("trajectory", ramsey_trajectory, spindle, phi0)
    gauge = GaugeChoice(cfg.gauge)
    analytic = _stage("analytic", geometric_phase, traj, cfg.m, gauge)
    scaled = PhysicalConstants().scaled(cfg.d_over_omega, cfg.omega)
    prop = PropagationConfig(cfg.dt, Method(cfg.method), cfg.tolerance) if cfg.dt else PropagationConfig.auto(
        scaled.D + abs(cfg.splitting), cfg.tolerance, Method(cfg.method)
    )
    numeric = _stage(
        "oracle",
        extract_geometric_phase,
        traj,
        cfg.m,
        prop,
        scaled,
        gauge,
        symmetrize=cfg.symmetrize,
        splitting=cfg.splitting,
    )
    row = _echo_inputs(cfg, "berry")
    row.update(
        phase_analytic=analytic.geometric,
        phase_numeric=numeric.geometric,
        difference=numeric.geometric - analytic.geometric,
        solid_angle=analytic.solid_angle,
        nonadiabatic_shift=numeric.nonadiabatic_shift,
        adiabaticity_margin=adiabaticity_margin(traj),
        oracle_margin=adiabaticity_margin(traj, scaled),
    )
    return [row]


def _protocol_row(cfg: RunConfig, command: str, result, traj) -> dict:
    rp = ReadoutParams(cfg.n_r, cfg.c, cfg.readout_mode)
    mean, std = _stage("readout", end_to_end_estimate, [result] * cfg.repetitions, rp, cfg.seed)
    row = _echo_inputs(cfg, command)
    row.update(
        phase_analytic=result.phase_estimate,
        population_m0=result.population_m0,
        coherence_factor=result.coherence_factor,
        duration=result.duration,
        phase_mc_mean=mean,
        phase_mc_std=std,
        phase_std_predicted=predicted_phase_std(rp, result.coherence_factor),
        adiabaticity_margin=adiabaticity_margin(traj) if traj is not None else math.inf,
    )
    return row


def _run_ramsey(cfg: RunConfig) -> list[dict]:
    phi0 = cfg.effective_phi0()
    spindle = SpindleConfig(omega=cfg.omega, nv_theta=cfg.theta)
    kind, timescale = cfg.decoherence()
    result = _stage("protocol", run_ramsey, spindle, phi0, DecoherenceModel(kind, timescale), cfg.retard)
    traj = ramsey_trajectory(spindle, phi0) if phi0 > 0 else None
    return [_protocol_row(cfg, "ramsey", result, traj)]


def _run_echo(cfg: RunConfig) -> list[dict]:
    spindle = SpindleConfig(omega=cfg.omega, tilt_theta0=cfg.theta0)
    kind, timescale = cfg.decoherence()
    result = _stage("protocol", run_echo, spindle, cfg.rotations, DecoherenceModel(kind, timescale), cfg.retard)
    traj = echo_trajectory(spindle, cfg.rotations)
    return [_protocol_row(cfg, "echo", result, traj)]


def _run_sensitivity(cfg: RunConfig) -> list[dict]:
    rows = []
    for label, T2 in (("echo", cfg.t2), ("ramsey", cfg.t2star)):
        sp = _stage("sensitivity", SensitivityParams.from_coherence, T2, cfg.a, cfg.omega, cfg.c, cfg.t_total)
        row = _echo_inputs(cfg, "sensitivity")
        row.update(
            sequence=label,
            coherence_time=T2,
            t_measure=sp.T_M,
            relative_sensitivity=relative_sensitivity(sp),
            relative_uncertainty=relative_uncertainty(sp),
            percent_after_t_total=100 * relative_sensitivity(sp) / math.sqrt(cfg.t_total),
        )
        rows.append(row)
    return rows


RUNNERS = {"berry": _run_berry, "ramsey": _run_ramsey, "echo": _run_echo, "sensitivity": _run_sensitivity}


def _sweep_point(args):
    cfg, value = args
    point = with_value(replace(cfg, command=cfg.sweep_command), cfg.sweep_param, value)
    rows = RUNNERS[point.command](point)
    return [{"sweep_param": cfg.sweep_param, "sweep_value": value, **r} for r in rows]


def _run_sweep(cfg: RunConfig) -> list[dict]:
    values = [float(v) for v in np.linspace(cfg.sweep_min, cfg.sweep_max, cfg.sweep_count)]
    tasks = [(cfg, v) for v in values]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(_sweep_point, tasks))
    else:
        chunks = [_sweep_point(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


RUNNERS["sweep"] = _run_sweep


def run(cfg: RunConfig) -> list[dict]:
    """Execute a validated configuration and return its records in emission order."""
    return RUNNERS[cfg.command](cfg)


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def _jsonable(v):
    v = _plain(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _cell(v):
    v = _plain(v)
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else v


def write_records(records: list[dict], cols: list[str], stream, as_json: bool = False) -> None:
    if as_json:
        for r in records:
            stream.write(json.dumps({k: _jsonable(r.get(k)) for k in cols}) + "\n")
        return
    writer = csv.DictWriter(stream, fieldnames=cols, lineterminator="\r\n", extrasaction="ignore")
    writer.writeheader()
    for r in records:
        writer.writerow({k: _cell(r.get(k)) for k in cols})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nvberry",
        description="Geometric phase of a rotating NV spin. Angles in rad, angular speeds in rad/s.",
    )
    p.add_argument("command", choices=list(RUNNERS))
    p.add_argument("--config", metavar="FILE", help="INI file with [geometry], [decoherence], [readout], [numeric], [sweep] sections")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides", help="override one setting")
    p.add_argument("--out", metavar="FILE", help="write records here instead of stdout")
    p.add_argument("--json", action="store_true", help="emit JSON lines instead of CSV")
    p.add_argument("--seed", type=int, help="readout RNG seed")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.command, args.config, args.overrides, args.seed)
    except ConfigError as exc:
        print(f"nvberry: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        records = run(cfg)
    except StageError as exc:
        print(f"nvberry: {exc}", file=sys.stderr)
        if isinstance(exc.error, NumericalError):
            return EXIT_NUMERIC
        if isinstance(exc.error, PhysicsPreconditionError):
            return EXIT_PHYSICS
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"nvberry: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    buf = io.StringIO()
    write_records(records, columns(cfg), buf, args.json)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
