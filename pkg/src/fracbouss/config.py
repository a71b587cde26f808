"""Run configuration: an INI file whose section.key paths map to symbols.

    grid.N, grid.L                     lattice size, box length
    phys.alpha, phys.epsilon           dissipation order, viscosity contrast |mu - 1|_inf
    phys.kappa, phys.mu_profile        thermal diffusivity, mu shape
    init.*                             random-phase envelope data
    time.mode                          fixed (dt = dt_max) or cfl (adaptive)
    diagnostics.p, .q, .s0             integrability/regularity indices of the data class
    fit.window, fit.beta, fit.gate     decay fit window and resolvability gate

Loading validates every field; ``dumps`` writes a canonical form, so
load -> dumps -> load -> dumps is a fixed point.
"""

from __future__ import annotations

import configparser
import math
import re
import warnings
from dataclasses import dataclass, field, fields

from . import admissibility as adm
from .errors import ConfigInvalid
from .solver import MU_PROFILES

SCHEMA = "fbsq-config/1"


@dataclass
class GridCfg:
    N: int = 128
    L: float = 32.0 * math.pi


@dataclass
class PhysCfg:
    alpha: float = 0.8
    epsilon: float = 0.05
    kappa: float = 1.0
    mu_profile: str = "exp_saturating"


@dataclass
class InitCfg:
    seed: int = 1
    amp_theta: float = 0.007
    amp_u: float = 0.0017
    a: float = 1.0
    xi_c: float = 0.5
    shift: bool = True


@dataclass
class TimeCfg:
    mode: str = "fixed"
    dt_max: float = 1e-3
    T_end: float = 10.0
    cfl_factor: float = 0.4
    sample_every: int = 10


@dataclass
class DiagCfg:
    p_list: tuple = (2.0, 4.0, math.inf)
    beta_list: tuple = (2.0,)
    p: float = 24.0
    q: float = 1.5
    s0: float = 1.5
    C_mu: float = 1.0
    enforce_admissible: bool = True
    gamma_min: float = 1.0
    gamma_max: float = math.inf


@dataclass
class FitCfg:
    window: tuple = (3.0, 7.5)
    beta: float = 1.0
    gate: float = 4.0


@dataclass
class OutputCfg:
    dir: str = "run"
    formats: tuple = ("csv", "json", "checkpoint")
    checkpoint_itemsize: int = 16


SECTIONS = {"grid": GridCfg, "phys": PhysCfg, "init": InitCfg, "time": TimeCfg,
            "diagnostics": DiagCfg, "fit": FitCfg, "output": OutputCfg}


@dataclass
class RunConfig:
    grid: GridCfg = field(default_factory=GridCfg)
    phys: PhysCfg = field(default_factory=PhysCfg)
    init: InitCfg = field(default_factory=InitCfg)
    time: TimeCfg = field(default_factory=TimeCfg)
    diagnostics: DiagCfg = field(default_factory=DiagCfg)
    fit: FitCfg = field(default_factory=FitCfg)
    output: OutputCfg = field(default_factory=OutputCfg)

    def get(self, path):
        sec, key = path.split(".", 1)
        return getattr(getattr(self, sec), key)

    def set(self, path, raw):
        """Set ``section.key`` from its string form (used for CLI overrides)."""
        sec, key = path.split(".", 1)
        if sec not in SECTIONS or key not in _field_types(SECTIONS[sec]):
            raise ConfigInvalid(f"unknown key {path!r}")
        obj = getattr(self, sec)
        setattr(obj, key, _parse(_field_types(SECTIONS[sec])[key], raw, path))


# ---------------------------------------------------------------- parsing

_NUM_PI = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*pi\s*$")


def _parse_float(raw, path):
    s = raw.strip().lower()
    if s in ("inf", "+inf", "infinity"):
        return math.inf
    m = _NUM_PI.match(s)
    try:
        if m:
            coef = m.group(1)
            return (float(coef) if coef not in ("", "+") else 1.0) * math.pi
        return float(s)
    except ValueError:
        raise ConfigInvalid(f"{path}: not a number: {raw!r}") from None


def _parse(kind, raw, path):
    if kind is int:
        try:
            return int(raw.strip())
        except ValueError:
            raise ConfigInvalid(f"{path}: not an integer: {raw!r}") from None
    if kind is float:
        return _parse_float(raw, path)
    if kind is bool:
        s = raw.strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigInvalid(f"{path}: not a boolean: {raw!r}")
    if kind == "floats":
        items = [x for x in raw.split(",") if x.strip()]
        return tuple(_parse_float(x, path) for x in items)
    if kind == "strs":
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    return raw.strip()


def _field_types(cls):
    out = {}
    for f in fields(cls):
        default = f.default
        if isinstance(default, bool):
            out[f.name] = bool
        elif isinstance(default, int):
            out[f.name] = int
        elif isinstance(default, float):
            out[f.name] = float
        elif isinstance(default, tuple):
            out[f.name] = "strs" if default and isinstance(default[0], str) else "floats"
        else:
            out[f.name] = str
    return out


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    return str(v)


def loads(text):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalid(f"unreadable config: {exc}") from None
    cfg = RunConfig()
    for sec in cp.sections():
        if sec == "meta":
            continue
        if sec not in SECTIONS:
            raise ConfigInvalid(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            cfg.set(f"{sec}.{key}", raw)
    validate(cfg)
    return cfg


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from None
    return loads(text)


def dumps(cfg):
    lines = ["[meta]", f"schema = {SCHEMA}", ""]
    for sec in SECTIONS:
        lines.append(f"[{sec}]")
        obj = getattr(cfg, sec)
        for f in fields(obj):
            lines.append(f"{f.name} = {_format(getattr(obj, f.name))}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------- validation

def _require(cond, msg):
    if not cond:
        raise ConfigInvalid(msg)


def validate(cfg):
    """Range checks plus the admissibility cross-check of (alpha, p, q, s0)."""
    g, ph, it, tm, dg, ft = cfg.grid, cfg.phys, cfg.init, cfg.time, cfg.diagnostics, cfg.fit
    _require(g.N >= 16 and g.N & (g.N - 1) == 0, f"grid.N must be a power of two >= 16, got {g.N}")
    _require(g.L > 0 and math.isfinite(g.L), "grid.L must be positive")
    _require(0 < ph.alpha <= 2, "phys.alpha must lie in (0, 2]")
    _require(0 <= ph.epsilon < 1, "phys.epsilon must lie in [0, 1)")
    _require(ph.kappa >= 0, "phys.kappa must be >= 0")
    _require(ph.mu_profile in MU_PROFILES, f"phys.mu_profile must be one of {MU_PROFILES}")
    _require(it.xi_c > 0, "init.xi_c must be positive")
    _require(it.a >= 0, "init.a must be >= 0")
    _require(it.amp_theta >= 0 and it.amp_u >= 0, "init amplitudes must be >= 0")
    _require(tm.mode in ("fixed", "cfl"), "time.mode must be fixed or cfl")
    _require(tm.dt_max > 0, "time.dt_max must be positive")
    _require(tm.T_end >= 0, "time.T_end must be >= 0")
    _require(0 < tm.cfl_factor <= 1, "time.cfl_factor must lie in (0, 1]")
    _require(tm.sample_every >= 1, "time.sample_every must be >= 1")
    _require(all(p >= 1 for p in dg.p_list), "diagnostics.p_list entries must be >= 1")
    _require(all(b > 0 for b in dg.beta_list), "diagnostics.beta_list entries must be > 0")
    _require(dg.q >= 1 and dg.s0 > 0 and dg.p >= 1, "diagnostics p, q >= 1 and s0 > 0")
    _require(dg.gamma_min < dg.gamma_max, "diagnostics.gamma_min must be < gamma_max")
    _require(len(ft.window) == 2 and 1 <= ft.window[0] < ft.window[1],
             "fit.window must be two times 1 <= t_a < t_b")
    _require(ft.beta > 0 and ft.gate > 0, "fit.beta and fit.gate must be positive")
    _require(cfg.output.checkpoint_itemsize in (8, 16), "output.checkpoint_itemsize must be 8 or 16")
    bad = set(cfg.output.formats) - {"csv", "json", "checkpoint"}
    _require(not bad, f"unknown output formats {sorted(bad)}")
    if dg.enforce_admissible:
        t = adm.check_wellposedness(ph.alpha, dg.p, dg.q, dg.s0, ph.epsilon, dg.C_mu)
        _require(t.passed, "inadmissible (alpha, p, q, s0): " + ", ".join(t.failing()))
        for name in t.warnings:
            warnings.warn(f"soft constraint not met: {name}", stacklevel=2)
    return cfg
