"""Run configuration: INI-style text <-> validated :class:`RunConfig`."""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .connection import ConnectionParams
from .geometry import PssParams
from .solver import stable_dt
from .spectral import MIN_POINTS, Field, PeriodicGrid

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "validate_config",
    "resolve_step",
    "serialize_config",
    "initial_datum",
    "read_field_csv",
    "COMMANDS",
]

COMMANDS = ("simulate", "geometry", "connection", "verify")
DATUM_KINDS = ("constant", "cos", "file")


class ConfigError(ValueError):
    """Every violation found while validating a configuration."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    command: str = "verify"
    t_end: float = 1.0
    dt: float | None = None
    output_stride: int = 100
    s_monitor: float = 2.0
    datum: str = "cos"
    datum_c: float = 0.5
    datum_a: float = 0.01
    datum_file: str = ""
    seed: int = 0
    n_points: int = 256
    pss_mu: tuple[float, ...] = (0.0,)
    pss_m1: tuple[int, ...] = (-2, 1)
    pss_sign: tuple[int, ...] = (1, -1)
    tau: float = 1e-8
    conn_mu: float = 1.0
    conn_m1: int = 1
    conn_beta: float = 0.0
    conn_gamma: float = 2.0
    conn_branch_phi1: int = 1
    conn_branch_ode: int = 1
    conn_z0: float = 0.0
    conn_b0: float = 1.2
    conn_z_start: float = 0.0
    conn_z_end: float = 0.5
    conn_step: float = 1e-3
    out_dir: str = "psslab-out"
    tol_scale: float = 1.0

    @property
    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.n_points)

    @property
    def pss_params(self) -> list[PssParams]:
        return [PssParams(mu, m1, s) for mu in self.pss_mu for m1 in self.pss_m1 for s in self.pss_sign]

    @property
    def connection_params(self) -> ConnectionParams:
        return ConnectionParams(
            mu=self.conn_mu, m1=self.conn_m1, beta=self.conn_beta, gamma=self.conn_gamma,
            branch_phi1=self.conn_branch_phi1, branch_ode=self.conn_branch_ode,
        )

    @property
    def datum_label(self) -> str:
        if self.datum == "constant":
            return f"constant({self.datum_c!r})"
        if self.datum == "cos":
            return f"cos({self.datum_c!r}, {self.datum_a!r})"
        return f"file({self.datum_file})"

    def as_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


# (section, key) -> attribute name and parser
_LAYOUT: dict[tuple[str, str], str] = {
    ("run", "command"): "command",
    ("run", "t_end"): "t_end",
    ("run", "dt"): "dt",
    ("run", "output_stride"): "output_stride",
    ("run", "s_monitor"): "s_monitor",
    ("run", "datum"): "datum",
    ("run", "datum_c"): "datum_c",
    ("run", "datum_a"): "datum_a",
    ("run", "datum_file"): "datum_file",
    ("run", "seed"): "seed",
    ("grid", "n_points"): "n_points",
    ("pss", "mu"): "pss_mu",
    ("pss", "m1"): "pss_m1",
    ("pss", "sign"): "pss_sign",
    ("pss", "tau"): "tau",
    ("connection", "mu"): "conn_mu",
    ("connection", "m1"): "conn_m1",
    ("connection", "beta"): "conn_beta",
    ("connection", "gamma"): "conn_gamma",
    ("connection", "branch_phi1"): "conn_branch_phi1",
    ("connection", "branch_ode"): "conn_branch_ode",
    ("connection", "z0"): "conn_z0",
    ("connection", "b0"): "conn_b0",
    ("connection", "z_start"): "conn_z_start",
    ("connection", "z_end"): "conn_z_end",
    ("connection", "step"): "conn_step",
    ("output", "directory"): "out_dir",
    ("output", "tol_scale"): "tol_scale",
}
_ATTR_TO_KEY = {v: f"{s}.{k}" for (s, k), v in _LAYOUT.items()}
_INT_ATTRS = {"output_stride", "seed", "n_points", "conn_m1", "conn_branch_phi1", "conn_branch_ode"}
_STR_ATTRS = {"command", "datum", "datum_file", "out_dir"}
_LIST_INT = {"pss_m1", "pss_sign"}
_LIST_FLOAT = {"pss_mu"}


def _convert(attr: str, raw: str):
    raw = raw.strip()
    if attr in _STR_ATTRS:
        return raw
    if attr == "dt" and raw.lower() in ("", "auto"):
        return None
    if attr in _LIST_INT:
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if attr in _LIST_FLOAT:
        return tuple(float(v) for v in raw.replace(",", " ").split())
    if attr in _INT_ATTRS:
        return int(raw)
    return float(raw)


def _finite(v) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v)


def _validate(cfg: RunConfig) -> list[str]:
    errs = []
    key = _ATTR_TO_KEY.get
    if cfg.command not in COMMANDS:
        errs.append(f"run.command must be one of {'|'.join(COMMANDS)}, got {cfg.command!r}")
    for f_ in fields(cfg):
        v = getattr(cfg, f_.name)
        if f_.name in _STR_ATTRS or v is None:
            continue
        vals = v if isinstance(v, tuple) else (v,)
        if not all(_finite(x) for x in vals):
            errs.append(f"{key(f_.name)} must be finite")
    if cfg.n_points < MIN_POINTS or cfg.n_points % 2:
        errs.append(f"grid.n_points must be even and >= {MIN_POINTS}, got {cfg.n_points}")
    if not cfg.t_end > 0:
        errs.append(f"run.t_end must be > 0, got {cfg.t_end}")
    if cfg.dt is not None and not cfg.dt > 0:
        errs.append(f"run.dt must be > 0, got {cfg.dt}")
    if cfg.output_stride < 1:
        errs.append(f"run.output_stride must be >= 1, got {cfg.output_stride}")
    if cfg.datum not in DATUM_KINDS:
        errs.append(f"run.datum must be one of {'|'.join(DATUM_KINDS)}, got {cfg.datum!r}")
    if cfg.datum == "file" and not cfg.datum_file:
        errs.append("run.datum_file is required when run.datum = file")
    if not cfg.pss_mu:
        errs.append("pss.mu must list at least one value")
    for m1 in cfg.pss_m1 or ():
        if m1 not in (-2, 1):
            errs.append(f"pss.m1: m1 must be -2 or 1, got {m1}")
    if not cfg.pss_m1:
        errs.append("pss.m1 must list at least one value")
    for s in cfg.pss_sign or ():
        if s not in (-1, 1):
            errs.append(f"pss.sign must be +1 or -1, got {s}")
    if not cfg.pss_sign:
        errs.append("pss.sign must list at least one value")
    if not cfg.tau > 0:
        errs.append(f"pss.tau must be > 0, got {cfg.tau}")
    if cfg.conn_m1 not in (-2, 1):
        errs.append(f"connection.m1: m1 must be -2 or 1, got {cfg.conn_m1}")
    for name in ("conn_branch_phi1", "conn_branch_ode"):
        if getattr(cfg, name) not in (-1, 1):
            errs.append(f"{key(name)} must be +1 or -1")
    if not cfg.conn_step > 0:
        errs.append(f"connection.step must be > 0, got {cfg.conn_step}")
    if not cfg.conn_z_start <= cfg.conn_z_end:
        errs.append("connection.z_start must not exceed connection.z_end")
    if not cfg.tol_scale > 0:
        errs.append(f"output.tol_scale must be > 0, got {cfg.tol_scale}")
    return errs


def validate_config(cfg: RunConfig) -> RunConfig:
    errors = _validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def resolve_step(cfg: RunConfig) -> RunConfig:
    """Fill a missing dt from the stability heuristic for commands that integrate."""
    if cfg.dt is not None or cfg.command not in ("simulate", "geometry"):
        return cfg
    try:
        return replace(cfg, dt=stable_dt(initial_datum(cfg)))
    except (OSError, ValueError) as exc:
        raise ConfigError([f"run.datum_file: {exc}"]) from None


def parse_config(text: str, resolve_dt: bool = True, default_command: str | None = None) -> RunConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem.

    With ``resolve_dt`` a missing ``run.dt`` is replaced by the stability
    heuristic evaluated on the initial datum.  ``default_command`` supplies
    run.command when the text omits it.
    """
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from None

    errors: list[str] = []
    values: dict = {}
    known_sections = {s for s, _ in _LAYOUT}
    for section in parser.sections():
        if section not in known_sections:
            errors.append(f"unknown section [{section}]")
            continue
        for k, raw in parser.items(section):
            attr = _LAYOUT.get((section, k))
            if attr is None:
                errors.append(f"unknown key {section}.{k}")
                continue
            try:
                values[attr] = _convert(attr, raw)
            except ValueError:
                errors.append(f"{section}.{k}: cannot parse {raw!r}")
    if "command" not in values:
        if default_command is None:
            errors.append("run.command is required")
        else:
            values["command"] = default_command
    cfg = RunConfig(**values)
    errors += _validate(cfg) if "command" in values else []
    if errors:
        raise ConfigError(errors)
    return resolve_step(cfg) if resolve_dt else cfg


def _format(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for (section, k), attr in _LAYOUT.items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, k, _format(getattr(cfg, attr)))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def read_field_csv(path: str | Path) -> np.ndarray:
    """Read the ``value`` column of an ``x,value`` CSV file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1]


def initial_datum(cfg: RunConfig) -> Field:
    grid = cfg.grid
    if cfg.datum == "constant":
        return Field(grid, np.full(grid.n_points, cfg.datum_c))
    if cfg.datum == "cos":
        return Field(grid, cfg.datum_c + cfg.datum_a * np.cos(2 * np.pi * grid.x))
    return Field(grid, read_field_csv(cfg.datum_file))
