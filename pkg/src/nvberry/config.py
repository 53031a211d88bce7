"""Run configuration: INI-style files with section headers plus ``key=value`` overrides.

Angles are radians and angular speeds rad/s throughout. There are no Hz or
degree inputs.

Example::

    [geometry]
    theta0 = 0.25
    rotations = 4

    [readout]
    c = 0.15
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import NVBerryError

COMMANDS = ("berry", "ramsey", "echo", "sensitivity", "sweep")
GAUGES = ("raw", "fixed")
MODELS = ("auto", "gaussian", "exponential")
METHODS = ("exp", "rk4")
READOUT_MODES = ("gaussian", "poisson")


class ConfigError(NVBerryError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    # geometry
    omega: float = 4000 * math.pi
    theta: float = math.pi / 3
    theta0: float = 0.25
    phi0: float | None = None
    rotations: int = 4
    m: int = 1
    splitting: float = 0.0
    # decoherence
    model: str = "auto"
    timescale: float | None = None
    t2star: float = 10e-6
    t2: float = 2e-3
    # readout
    n_r: int = 100_000
    c: float = 0.15
    a: float = 2.0
    t_total: float = 3 * 3600.0
    seed: int = 0
    repetitions: int = 200
    readout_mode: str = "gaussian"
    retard: float = 0.0
    # numeric
    dt: float | None = None
    tolerance: float = 1e-3
    gauge: str = "raw"
    method: str = "exp"
    d_over_omega: float = 1000.0
    symmetrize: bool = True
    # sweep
    sweep_command: str = "ramsey"
    sweep_param: str = "theta"
    sweep_min: float = 0.1
    sweep_max: float = 1.5
    sweep_count: int = 15
    jobs: int = 1

    def effective_phi0(self) -> float:
        if self.phi0 is not None:
            return self.phi0
        if self.command == "ramsey":
            return self.omega * self.t2star
        return 2 * math.pi

    def decoherence(self) -> tuple[str, float]:
        """(kind, timescale) after applying per-command defaults."""
        model = self.model
        if model == "auto":
            model = "exponential" if self.command == "echo" else "gaussian"
        if self.timescale is not None:
            return model, self.timescale
        return model, self.t2 if model == "exponential" else self.t2star


SECTIONS: dict[str, tuple[str, ...]] = {
    "run": ("command",),
    "geometry": ("omega", "theta", "theta0", "phi0", "rotations", "m", "splitting"),
    "decoherence": ("model", "timescale", "t2star", "t2"),
    "readout": ("n_r", "c", "a", "t_total", "seed", "repetitions", "readout_mode", "retard"),
    "numeric": ("dt", "tolerance", "gauge", "method", "d_over_omega", "symmetrize"),
    "sweep": ("sweep_command", "sweep_param", "sweep_min", "sweep_max", "sweep_count", "jobs"),
}
_SWEEP_ALIASES = {"command": "sweep_command", "param": "sweep_param", "min": "sweep_min", "max": "sweep_max", "count": "sweep_count"}
_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
SWEEPABLE = ("omega", "theta", "theta0", "phi0", "rotations", "timescale", "t2star", "t2", "n_r", "c", "a", "retard", "d_over_omega")


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    text = raw.strip()
    try:
        if "None" in kind and text.lower() in ("", "none"):
            return None
        if kind.startswith("float"):
            return float(text)
        if kind.startswith("int"):
            value = float(text)
            if value != int(value):
                raise ValueError(f"{text!r} is not an integer")
            return int(value)
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"{text!r} is not a boolean")
    except ValueError as exc:
        raise ParseError(f"field {key!r}: cannot parse {raw!r} ({exc})") from None
    return text


def _canonical(section: str | None, key: str) -> str:
    key = key.strip().lower()
    if section == "sweep":
        key = _SWEEP_ALIASES.get(key, key)
    if section is None:
        if "." in key:
            section, key = key.split(".", 1)
            return _canonical(section, key)
        if key in _FIELD_TYPES:
            return key
        raise ParseError(f"unknown key {key!r}")
    if section not in SECTIONS:
        raise ParseError(f"unknown section [{section}]")
    if key not in SECTIONS[section]:
        raise ParseError(f"unknown key {key!r} in section [{section}]")
    return key


def read_config_file(path: str | Path) -> dict[str, object]:
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    lines = text.splitlines()
    values: dict[str, object] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            try:
                name = _canonical(section.lower(), key)
            except ParseError as exc:
                lineno = next((i + 1 for i, ln in enumerate(lines) if ln.strip().lower().startswith(key.lower())), "?")
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            values[name] = _convert(name, raw)
    return values


def parse_overrides(items: list[str]) -> dict[str, object]:
    values: dict[str, object] = {}
    for item in items:
        if "=" not in item:
            raise ParseError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        name = _canonical(None, key)
        values[name] = _convert(name, raw)
    return values


def validate(cfg: RunConfig) -> RunConfig:
    def need(cond: bool, message: str):
        if not cond:
            raise ValidationError(message)

    need(cfg.command in COMMANDS, f"command must be one of {COMMANDS}, got {cfg.command!r}")
    need(math.isfinite(cfg.omega) and cfg.omega > 0, "omega must be positive (rad/s)")
    need(0 <= cfg.theta <= math.pi / 2, "theta must lie in [0, pi/2] (rad)")
    need(0 <= cfg.theta0 < math.pi / 2, "theta0 must lie in [0, pi/2) (rad)")
    need(cfg.phi0 is None or cfg.phi0 >= 0, "phi0 must be non-negative (rad)")
    need(cfg.rotations >= 1, "rotations must be >= 1")
    need(cfg.m in (-1, 0, 1), "m must be -1, 0 or 1")
    need(math.isfinite(cfg.splitting), "splitting must be finite (rad/s)")
    need(cfg.model in MODELS, f"model must be one of {MODELS}")
    need(cfg.timescale is None or cfg.timescale > 0, "timescale must be positive (s)")
    need(cfg.t2star > 0 and cfg.t2 > 0, "coherence times must be positive (s)")
    need(cfg.n_r >= 1, "n_r must be a positive integer")
    need(0 < cfg.c <= 1, "c must lie in (0, 1]")
    need(cfg.a > 1, "a must exceed 1")
    need(cfg.t_total > 0, "t_total must be positive (s)")
    need(cfg.seed >= 0, "seed must be non-negative")
    need(cfg.repetitions >= 100, "repetitions must be >= 100")
    need(cfg.readout_mode in READOUT_MODES, f"readout_mode must be one of {READOUT_MODES}")
    need(cfg.dt is None or cfg.dt > 0, "dt must be positive (s)")
    need(0 < cfg.tolerance <= 1e-3, "tolerance must lie in (0, 1e-3]")
    need(cfg.gauge in GAUGES, f"gauge must be one of {GAUGES}")
    need(cfg.method in METHODS, f"method must be one of {METHODS}")
    need(cfg.d_over_omega >= 10, "d_over_omega must be >= 10")
    need(cfg.sweep_command in COMMANDS and cfg.sweep_command != "sweep", "sweep_command must name a non-sweep command")
    need(cfg.sweep_param in SWEEPABLE, f"sweep_param must be one of {SWEEPABLE}")
    need(cfg.sweep_count >= 1, "sweep_count must be >= 1")
    need(cfg.jobs >= 1, "jobs must be >= 1")
    return cfg


def parse_config(
    command: str | None = None,
    path: str | Path | None = None,
    overrides: list[str] | None = None,
    seed: int | None = None,
) -> RunConfig:
    """Merge defaults, an optional config file and ``key=value`` overrides, then validate."""
    values: dict[str, object] = {}
    if path is not None:
        if not Path(path).is_file():
            raise ParseError(f"config file {path} does not exist")
        values.update(read_config_file(path))
    values.update(parse_overrides(overrides or []))
    if seed is not None:
        values["seed"] = seed
    if command is not None:
        values["command"] = command
    if "command" not in values:
        raise ParseError("no command given")
    return validate(RunConfig(**values))


def with_value(cfg: RunConfig, key: str, value) -> RunConfig:
    if _FIELD_TYPES[key].startswith("int"):
        value = int(round(value))
    return validate(replace(cfg, **{key: value}))


def as_dict(cfg: RunConfig) -> dict[str, object]:
    return asdict(cfg)
