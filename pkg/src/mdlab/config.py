"""Run configuration files.

Grammar: ``[section]`` headers, ``key = value`` lines and ``#`` comments.
Every key is optional; unknown sections or keys are errors.  Sequences are
comma separated.  Example::

    [grid]
    n = 32
    L = 40

    [run]
    T = 10          # must satisfy T <= L/2 - r0 unless allow_past_horizon
"""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field
from typing import Optional

from .evolution import IntegratorConfig
from .grid import FourierGrid
from .resonance import SampleSpec
from .scattering import ModesSpec, PaperConstants
from .state import DataRecipe


class ConfigError(ValueError):
    """Parse or validation failure; ``line`` is 1-based when known."""

    def __init__(self, msg: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line, self.key = line, key
        super().__init__(f"line {line}: {msg}" if line else msg)


def _floats(s):
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in s.split(",") if v.strip())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt(conv):
    def f(s):
        return None if s.strip().lower() in ("", "auto", "none") else conv(s)
    return f


# section -> key -> (converter, default)
SCHEMA = {
    "grid": {"n": (int, 32), "L": (float, 40.0), "mass": (float, 1.0)},
    "data": {
        "amplitude": (float, 0.01), "width": (float, 3.5), "momentum": (_floats, (0.0, 0.0, 0.0)),
        "center": (_floats, (0.0, 0.0, 0.0)), "gauge_amplitude": (_opt(float), None),
        "gauge_width": (_opt(float), None),
    },
    "integrator": {
        "dt": (_opt(float), None), "scheme": (str, "ifrk4"), "dealias": (_bool, True),
        "coupling": (str, "full"),
    },
    "run": {
        "T": (float, 10.0), "stride": (int, 10), "seed": (int, 0), "output_dir": (str, "mdlab_out"),
        "checkpoint_every": (int, 0), "allow_past_horizon": (_bool, False),
    },
    "constants": {
        "delta": (float, 1e-10), "zeta": (_opt(float), None), "N": (_ints, (70, 30, 20, 10)),
        "H": (_ints, (1, 10, 210, 410)),
    },
    "resonance": {
        "n_samples": (int, 100_000), "n_targeted": (int, 20_000), "log2_min": (float, -10.0),
        "log2_max": (float, 10.0), "phase_samples": (int, 200_000),
    },
    "scattering": {
        "times": (_floats, (5.0, 10.0, 20.0, 40.0)), "xi_max": (_opt(float), None),
        "k_lo": (int, -3), "k_hi": (int, 2), "top": (int, 10),
    },
    "identity": {"L": (float, 100.0), "t": (float, 1.0), "amplitude": (float, 0.01)},
}


@dataclass
class RunConfig:
    """Validated settings for one run; ``values`` mirrors ``SCHEMA``."""

    values: dict = field(default_factory=dict)
    source: Optional[str] = None

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def grid(self) -> FourierGrid:
        g = self.values["grid"]
        return FourierGrid(g["n"], g["L"], g["mass"])

    @property
    def recipe(self) -> DataRecipe:
        d = self.values["data"]
        return DataRecipe(amplitude=d["amplitude"], width=d["width"], momentum=d["momentum"],
                          center=d["center"], gauge_amplitude=d["gauge_amplitude"],
                          gauge_width=d["gauge_width"], seed=self.values["run"]["seed"])

    @property
    def horizon(self) -> float:
        return self.grid.horizon(self.recipe.data_radius)

    @property
    def integrator(self) -> IntegratorConfig:
        i = self.values["integrator"]
        return IntegratorConfig(dt=i["dt"], scheme=i["scheme"], dealias=i["dealias"],
                                coupling=i["coupling"], horizon=self.horizon)

    @property
    def constants(self) -> PaperConstants:
        c = self.values["constants"]
        return PaperConstants(N=tuple(c["N"]), H=tuple(c["H"]), delta=c["delta"], zeta_override=c["zeta"])

    @property
    def sample_spec(self) -> SampleSpec:
        r = self.values["resonance"]
        return SampleSpec(n_samples=r["n_samples"], log2_min=r["log2_min"], log2_max=r["log2_max"],
                          n_targeted=r["n_targeted"], seed=self.values["run"]["seed"])

    @property
    def modes(self) -> ModesSpec:
        s = self.values["scattering"]
        return ModesSpec(k_lo=s["k_lo"], k_hi=s["k_hi"], top=s["top"])

    def as_dict(self) -> dict:
        out = {sec: {k: (list(v) if isinstance(v, tuple) else v) for k, v in vals.items()}
               for sec, vals in self.values.items()}
        out["constants"]["overrides"] = self.constants.overrides()
        return out


def defaults() -> dict:
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def _line_of(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        m = re.match(r"^\[(.+)\]$", line)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if key is not None and cur == section and "=" in line:
            if line.split("=", 1)[0].strip() == key:
                return i
    return None


def parse_config(text: str, source: Optional[str] = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                   interpolation=None, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside any [section]", e.lineno) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", e.lineno) from e
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", e.lineno, e.option) from e
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError("expected 'key = value'", lineno) from e

    values = defaults()
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", _line_of(text, sec))
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", _line_of(text, sec, key), key)
            conv = SCHEMA[sec][key][0]
            try:
                values[sec][key] = conv(raw)
            except ValueError as e:
                raise ConfigError(f"{sec}.{key}: {e}", _line_of(text, sec, key), key) from e
    cfg = RunConfig(values, source)
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    """Parse and validate a config file (an empty file gives all defaults)."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        return parse_config(fh.read(), str(path))


def _field_error(name, msg):
    return ConfigError(f"{name}: {msg}", key=name)


def validate(cfg: RunConfig) -> None:
    v = cfg.values
    g = v["grid"]
    if g["n"] < 4 or g["n"] % 2:
        raise _field_error("grid.n", "must be an even integer >= 4")
    if not g["L"] > 0:
        raise _field_error("grid.L", "must be positive")
    if not g["mass"] > 0:
        raise _field_error("grid.mass", "must be positive (massive system only)")
    d = v["data"]
    for key in ("momentum", "center"):
        if len(d[key]) != 3:
            raise _field_error(f"data.{key}", "needs three components")
    if not d["width"] > 0:
        raise _field_error("data.width", "must be positive")
    try:
        cfg.integrator
    except ValueError as e:
        raise _field_error("integrator", str(e)) from e
    r = v["run"]
    if r["T"] < 0:
        raise _field_error("run.T", "must be nonnegative")
    if r["stride"] < 1:
        raise _field_error("run.stride", "must be >= 1")
    if r["checkpoint_every"] < 0:
        raise _field_error("run.checkpoint_every", "must be >= 0")
    if r["T"] > cfg.horizon and not r["allow_past_horizon"]:
        raise _field_error("run.T", f"T = {r['T']:g} exceeds the horizon L/2 - r0 = {cfg.horizon:.4g}; "
                           "set allow_past_horizon = true to override")
    c = v["constants"]
    if c["delta"] < 0:
        raise _field_error("constants.delta", "must be nonnegative")
    if len(c["N"]) != 4 or len(c["H"]) != 4:
        raise _field_error("constants.N", "N and H need four entries each")
    s = v["scattering"]
    if len(s["times"]) < 2 or list(s["times"]) != sorted(s["times"]):
        raise _field_error("scattering.times", "needs at least two increasing times")
    if s["k_lo"] > s["k_hi"]:
        raise _field_error("scattering.k_lo", "must not exceed k_hi")
    res = v["resonance"]
    if res["n_samples"] < 1 or res["log2_min"] >= res["log2_max"]:
        raise _field_error("resonance", "needs n_samples >= 1 and log2_min < log2_max")

