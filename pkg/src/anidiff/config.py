"""Structured-text run configuration: sections of key=value pairs.

Sections: [grid], [physics], [assignment], [stepping], [initial], [output].
Serialization is canonical (fixed key order, 17-significant-digit floats), so
serialize(parse(text)) is idempotent after the first normalization.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import read_checkpoint
from .indexsets import MhdAssignment, NsAssignment
from .solver import PhysParams, SimState, StepControl
from .spectral import Grid, VectorField

__all__ = ["RunConfig", "InitialSpec", "OutputSpec", "ConfigError",
           "parse_config", "load_config", "serialize_config", "build_state"]


class ConfigError(ValueError):
    """Malformed configuration; message carries section/key context."""


def fmt_float(x: float) -> str:
    """17 significant digits: enough to reproduce any double exactly."""
    return f"{x:.17g}"


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "taylor_green"  # taylor_green | random | single_mode | checkpoint
    amplitude: float = 1.0
    seed: int = 0
    b_kind: str = "random"
    b_amplitude: float = 1.0
    b_seed: int = 1
    path: str = ""
    component: int = 1
    xi: tuple[int, int, int] = (1, 2, 5)

    def __post_init__(self):
        kinds = ("taylor_green", "random", "single_mode", "checkpoint")
        if self.kind not in kinds:
            raise ConfigError(f"[initial] kind must be one of {kinds}, got {self.kind!r}")
        if self.b_kind not in ("random", "zero"):
            raise ConfigError(f"[initial] b_kind must be random or zero, got {self.b_kind!r}")
        if self.kind == "checkpoint" and not self.path:
            raise ConfigError("[initial] kind=checkpoint requires path")
        if self.component not in (1, 2, 3):
            raise ConfigError("[initial] component must be in {1,2,3}")


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    diagnostics: str = "diagnostics.csv"
    summary: str = "summary.json"
    checkpoint: str = "final.ckpt"
    checkpoint_every: int = 0
    diagnostics_every: int = 1

    def __post_init__(self):
        if self.checkpoint_every < 0 or self.diagnostics_every < 1:
            raise ConfigError("[output] cadences must be nonnegative (diagnostics >= 1)")


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    params: PhysParams
    assignment: NsAssignment | MhdAssignment
    stepping: StepControl
    initial: InitialSpec = field(default_factory=InitialSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)
    mode: str = "ns"
    allow_bad: bool = False

    @property
    def seed(self) -> int:
        return self.initial.seed

    def __post_init__(self):
        if self.mode not in ("ns", "mhd"):
            raise ConfigError(f"[physics] mode must be ns or mhd, got {self.mode!r}")
        if self.mode == "mhd":
            if not isinstance(self.assignment, MhdAssignment):
                raise ConfigError("[assignment] mhd mode requires j1, j2, j3")
            if self.params.eta is None:
                raise ConfigError("[physics] mhd mode requires eta")
        elif isinstance(self.assignment, MhdAssignment):
            raise ConfigError("[assignment] ns mode must not set j labels")


def _get(cp, section, key, conv, default=None, required=False):
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"[{section}] missing required key {key!r}")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def _to_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for section in ("grid", "physics", "assignment", "stepping"):
        if not cp.has_section(section):
            raise ConfigError(f"missing required section [{section}]")

    n = _get(cp, "grid", "n", int)
    n1 = _get(cp, "grid", "n1", int, default=n)
    n2 = _get(cp, "grid", "n2", int, default=n)
    n3 = _get(cp, "grid", "n3", int, default=n)
    if None in (n1, n2, n3):
        raise ConfigError("[grid] needs n or all of n1, n2, n3")
    try:
        grid = Grid(
            n1, n2, n3,
            box_length=_get(cp, "grid", "box_length", float, default=2 * math.pi),
            dealias_fraction=_get(cp, "grid", "dealias_fraction", float, default=2.0 / 3.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from exc

    mode = _get(cp, "physics", "mode", str, default="ns").strip().lower()
    try:
        params = PhysParams(
            nu=_get(cp, "physics", "nu", float, required=True),
            eta=_get(cp, "physics", "eta", float),
            gamma=_get(cp, "physics", "gamma", float, default=2.5),
            linear_only=_get(cp, "physics", "linear_only", _to_bool, default=False),
        )
    except ValueError as exc:
        raise ConfigError(f"[physics] {exc}") from exc

    labels = {}
    for key in ("i1", "i2", "i3", "j1", "j2", "j3"):
        labels[key] = _get(cp, "assignment", key, int)
    if None in (labels["i1"], labels["i2"], labels["i3"]):
        raise ConfigError("[assignment] requires i1, i2, i3")
    has_j = any(labels[k] is not None for k in ("j1", "j2", "j3"))
    try:
        if mode == "mhd":
            if not all(labels[k] is not None for k in ("j1", "j2", "j3")):
                raise ConfigError("[assignment] mhd mode requires j1, j2, j3")
            assignment = MhdAssignment.from_labels(*(labels[k] for k in
                                                     ("i1", "i2", "i3", "j1", "j2", "j3")))
        else:
            if has_j:
                raise ConfigError("[assignment] ns mode must not set j labels")
            assignment = NsAssignment(labels["i1"], labels["i2"], labels["i3"])
    except ValueError as exc:
        raise ConfigError(f"[assignment] {exc}") from exc
    allow_bad = _get(cp, "assignment", "allow_bad", _to_bool, default=False)

    try:
        stepping = StepControl(
            dt=_get(cp, "stepping", "dt", float, required=True),
            t_end=_get(cp, "stepping", "t_end", float, required=True),
            cfl_guard=_get(cp, "stepping", "cfl_guard", float),
        )
    except ValueError as exc:
        raise ConfigError(f"[stepping] {exc}") from exc

    def _xi(raw: str) -> tuple[int, int, int]:
        parts = raw.replace(",", " ").split()
        if len(parts) != 3:
            raise ValueError("xi needs three integers")
        return tuple(int(p) for p in parts)

    initial = InitialSpec(
        kind=_get(cp, "initial", "kind", str, default="taylor_green").strip(),
        amplitude=_get(cp, "initial", "amplitude", float, default=1.0),
        seed=_get(cp, "initial", "seed", int, default=0),
        b_kind=_get(cp, "initial", "b_kind", str, default="random").strip(),
        b_amplitude=_get(cp, "initial", "b_amplitude", float, default=1.0),
        b_seed=_get(cp, "initial", "b_seed", int, default=1),
        path=_get(cp, "initial", "path", str, default="").strip(),
        component=_get(cp, "initial", "component", int, default=1),
        xi=_get(cp, "initial", "xi", _xi, default=(1, 2, 5)),
    ) if cp.has_section("initial") else InitialSpec()

    outputs = OutputSpec(
        directory=_get(cp, "output", "dir", str, default="out").strip(),
        diagnostics=_get(cp, "output", "diagnostics", str, default="diagnostics.csv").strip(),
        summary=_get(cp, "output", "summary", str, default="summary.json").strip(),
        checkpoint=_get(cp, "output", "checkpoint", str, default="final.ckpt").strip(),
        checkpoint_every=_get(cp, "output", "checkpoint_every", int, default=0),
        diagnostics_every=_get(cp, "output", "diagnostics_every", int, default=1),
    ) if cp.has_section("output") else OutputSpec()

    return RunConfig(
        grid=grid, params=params, assignment=assignment, stepping=stepping,
        initial=initial, outputs=outputs, mode=mode, allow_bad=allow_bad,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def serialize_config(cfg: RunConfig) -> str:
    out = io.StringIO()
    w = out.write
    w("[grid]\n")
    w(f"n1 = {cfg.grid.n1}\nn2 = {cfg.grid.n2}\nn3 = {cfg.grid.n3}\n")
    w(f"box_length = {fmt_float(cfg.grid.box_length)}\n")
    w(f"dealias_fraction = {fmt_float(cfg.grid.dealias_fraction)}\n\n")
    w("[physics]\n")
    w(f"mode = {cfg.mode}\nnu = {fmt_float(cfg.params.nu)}\n")
    if cfg.params.eta is not None:
        w(f"eta = {fmt_float(cfg.params.eta)}\n")
    w(f"gamma = {fmt_float(cfg.params.gamma)}\n")
    w(f"linear_only = {'true' if cfg.params.linear_only else 'false'}\n\n")
    w("[assignment]\n")
    a = cfg.assignment
    ns = a.ns if isinstance(a, MhdAssignment) else a
    w(f"i1 = {ns.i1}\ni2 = {ns.i2}\ni3 = {ns.i3}\n")
    if isinstance(a, MhdAssignment):
        w(f"j1 = {a.j1}\nj2 = {a.j2}\nj3 = {a.j3}\n")
    w(f"allow_bad = {'true' if cfg.allow_bad else 'false'}\n\n")
    w("[stepping]\n")
    w(f"dt = {fmt_float(cfg.stepping.dt)}\nt_end = {fmt_float(cfg.stepping.t_end)}\n")
    if cfg.stepping.cfl_guard is not None:
        w(f"cfl_guard = {fmt_float(cfg.stepping.cfl_guard)}\n")
    w("\n[initial]\n")
    ini = cfg.initial
    w(f"kind = {ini.kind}\namplitude = {fmt_float(ini.amplitude)}\nseed = {ini.seed}\n")
    if cfg.mode == "mhd":
        w(f"b_kind = {ini.b_kind}\nb_amplitude = {fmt_float(ini.b_amplitude)}\n")
        w(f"b_seed = {ini.b_seed}\n")
    if ini.kind == "checkpoint":
        w(f"path = {ini.path}\n")
    if ini.kind == "single_mode":
        w(f"component = {ini.component}\n")
        w(f"xi = {ini.xi[0]} {ini.xi[1]} {ini.xi[2]}\n")
    w("\n[output]\n")
    o = cfg.outputs
    w(f"dir = {o.directory}\ndiagnostics = {o.diagnostics}\nsummary = {o.summary}\n")
    w(f"checkpoint = {o.checkpoint}\ncheckpoint_every = {o.checkpoint_every}\n")
    w(f"diagnostics_every = {o.diagnostics_every}\n")
    return out.getvalue()


def build_state(cfg: RunConfig) -> SimState:
    """Construct the initial simulation state described by the config."""
    from .initial import random_solenoidal, single_mode_velocity, taylor_green

    grid = cfg.grid
    ini = cfg.initial
    t0 = 0.0
    if ini.kind == "checkpoint":
        dims, box_length, t0, fields = read_checkpoint(ini.path)
        if dims != grid.shape:
            raise ConfigError(
                f"checkpoint dims {dims} do not match [grid] {grid.shape}"
            )
        if not math.isclose(box_length, grid.box_length, rel_tol=1e-15):
            raise ConfigError("checkpoint box_length does not match [grid]")
        expected = 6 if cfg.mode == "mhd" else 3
        if len(fields) != expected:
            raise ConfigError(
                f"checkpoint has {len(fields)} fields, {cfg.mode} mode needs {expected}"
            )
        u = VectorField.from_stacked(grid, np.stack(fields[0:3]), solenoidal=True)
        b = (
            VectorField.from_stacked(grid, np.stack(fields[3:6]), solenoidal=True)
            if cfg.mode == "mhd"
            else None
        )
    else:
        if ini.kind == "taylor_green":
            u = taylor_green(grid, amplitude=ini.amplitude)
        elif ini.kind == "random":
            u = random_solenoidal(grid, ini.seed, amplitude=ini.amplitude)
        else:
            u = single_mode_velocity(grid, ini.component, ini.xi, amplitude=ini.amplitude)
        b = None
        if cfg.mode == "mhd":
            if ini.b_kind == "zero":
                b = VectorField.zeros(grid)
            else:
                b = random_solenoidal(grid, ini.b_seed, amplitude=ini.b_amplitude)
    return SimState(
        t=t0, u=u, b=b, assignment=cfg.assignment, params=cfg.params,
        step=int(round(t0 / cfg.stepping.dt)),
    )
