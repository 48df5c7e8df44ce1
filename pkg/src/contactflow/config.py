"""Run configuration: flat key = value files with section headers.

Sections organize the file but keys are globally unique, so command-line
flags can override any key by name.  The echo written into every output
directory contains all keys with defaults filled, in a fixed order, so
identical configurations hash and diff identically.
"""

import configparser
import io
from dataclasses import dataclass, fields

from .errors import ConfigError

__all__ = ["SolverConfig", "parse_config", "parse_config_text", "config_echo"]

SOLVERS = ("lagrangian", "eulerian", "both")
FAMILIES = ("rational_bump", "scaled_rational_bump", "tabulated")

# key -> (section, type); order fixes the echo layout
_SCHEMA = {
    "solver": ("run", str),
    "t_end": ("run", float),
    "output_interval": ("run", float),
    "expect_blowup": ("run", bool),
    "family": ("profile", str),
    "amplitude": ("profile", float),
    "target_g0": ("profile", float),
    "profile_path": ("profile", str),
    "L": ("grid", float),
    "n": ("grid", int),
    "resolutions": ("grid", str),
    "rk_tolerance": ("integrator", float),
    "cfl": ("integrator", float),
    "a_min": ("integrator", float),
    "b_max": ("integrator", float),
    "blow_threshold": ("integrator", float),
    "dt_min": ("integrator", float),
    "dt_max": ("integrator", float),
}


@dataclass
class SolverConfig:
    solver: str = "lagrangian"
    t_end: float = 1.0
    output_interval: float = 0.1
    expect_blowup: bool = False
    family: str = "rational_bump"
    amplitude: float = 1.0
    target_g0: float = -1.0
    profile_path: str = ""
    L: float = 40.0
    n: int = 2001
    resolutions: str = ""          # comma-separated odd counts, for compare
    rk_tolerance: float = 1e-8
    cfl: float = 0.5
    a_min: float = 1e-4
    b_max: float = 1e4
    blow_threshold: float = 1e3
    dt_min: float = 1e-10
    dt_max: float = 0.1

    def validate(self) -> None:
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}", field="solver")
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}", field="family")
        if self.family == "tabulated" and not self.profile_path:
            raise ConfigError("tabulated profiles need profile_path", field="profile_path")
        if self.family == "scaled_rational_bump" and not self.target_g0 < 0.0:
            raise ConfigError("target_g0 must be negative", field="target_g0")
        if not self.t_end > 0.0:
            raise ConfigError("t_end must be positive", field="t_end")
        if not 0.0 < self.output_interval <= self.t_end:
            raise ConfigError("output_interval must lie in (0, t_end]",
                              field="output_interval")
        if not self.L > 0.0:
            raise ConfigError("L must be positive", field="L")
        if self.n < 3 or self.n % 2 == 0:
            raise ConfigError("n must be odd and >= 3", field="n")
        if not 0.0 < self.a_min < 1.0 < self.b_max:
            raise ConfigError("need 0 < a_min < 1 < b_max", field="a_min")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]", field="cfl")
        if not 0.0 < self.dt_min < self.dt_max:
            raise ConfigError("need 0 < dt_min < dt_max", field="dt_min")
        if not self.blow_threshold > 0.0:
            raise ConfigError("blow_threshold must be positive", field="blow_threshold")
        for m in self.resolution_list():
            if m < 3 or m % 2 == 0:
                raise ConfigError("resolutions must be odd and >= 3", field="resolutions")

    def resolution_list(self) -> list[int]:
        if not self.resolutions.strip():
            return []
        try:
            return [int(tok) for tok in self.resolutions.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(str(exc), field="resolutions") from exc


def _coerce(key: str, raw: str):
    typ = _SCHEMA[key][1]
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {raw!r}", field=key) from exc


def parse_config_text(text: str) -> SolverConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"config parse failure: {exc.message.splitlines()[0]}",
                          line=line) from exc
    cfg = SolverConfig()
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in _SCHEMA:
                raise ConfigError("unknown configuration key", field=key)
            setattr(cfg, key, _coerce(key, raw))
    cfg.validate()
    return cfg


def parse_config(path) -> SolverConfig:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_echo(cfg: SolverConfig) -> str:
    """Canonical text with every key present, ready to re-parse."""
    by_section: dict[str, list[str]] = {}
    values = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for key, (section, _typ) in _SCHEMA.items():
        by_section.setdefault(section, []).append(f"{key} = {_format_value(values[key])}")
    out = io.StringIO()
    for section in ("run", "profile", "grid", "integrator"):
        out.write(f"[{section}]\n")
        for line in by_section.get(section, []):
            out.write(line + "\n")
    return out.getvalue()
