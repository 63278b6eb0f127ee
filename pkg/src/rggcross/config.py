"""Experiment configuration files: INI sections whose keys mirror ``ExperimentConfig``."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .experiments import ExperimentConfig, PlaneMode, ProcessKind
from .geometry import BodyKind, ConvexBody
from .pointprocess import RegimeSchedule
from .stress import WeightKind

REQUIRED = ("body", "d", "schedule", "t_grid", "reps", "seed")
OPTIONAL = ("plane_mode", "weight", "process", "plane_index", "constants_samples")

_ALIASES = {
    "plane_mode": {"fixedseeded": "fixed", "randomperrep": "random"},
    "weight": {"inversesquare": "inverse_square"},
    "body": {"unitvolumeball": "ball", "unitcube": "cube"},
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentEntry:
    config: ExperimentConfig
    constants_samples: int = 10 ** 6


def parse_count(text: str) -> int:
    """Integer that may be written in scientific notation, e.g. ``1e7``."""
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text}")
    return int(value)


def _enum_value(key, raw, enum):
    v = raw.strip().lower()
    v = _ALIASES.get(key, {}).get(v.replace("_", "").replace("-", ""), v)
    try:
        return enum(v)
    except ValueError:
        choices = ", ".join(e.value for e in enum)
        raise ConfigError(key, f"unknown value {raw!r} (expected one of {choices})") from None


def _section(name: str, sec) -> ExperimentEntry:
    keys = set(sec.keys())
    unknown = keys - set(REQUIRED) - set(OPTIONAL)
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown key in section [{name}]")
    for k in REQUIRED:
        if k not in keys:
            raise ConfigError(k, f"missing from section [{name}]")

    def conv(key, fn):
        try:
            return fn(sec[key])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None

    body_kind = _enum_value("body", sec["body"], BodyKind)
    d = conv("d", parse_count)
    if d < 2:
        raise ConfigError("d", f"dimension must be >= 2, got {d}")
    schedule = conv("schedule", RegimeSchedule.parse)
    t_grid = conv("t_grid", lambda s: tuple(float(x) for x in s.replace(",", " ").split()))
    reps = conv("reps", parse_count)
    seed = conv("seed", parse_count)
    kwargs = {}
    if "plane_mode" in keys:
        kwargs["plane_mode"] = _enum_value("plane_mode", sec["plane_mode"], PlaneMode)
    if "weight" in keys:
        kwargs["weight"] = _enum_value("weight", sec["weight"], WeightKind)
    if "process" in keys:
        kwargs["process"] = _enum_value("process", sec["process"], ProcessKind)
    if "plane_index" in keys:
        kwargs["plane_index"] = conv("plane_index", parse_count)
    n_const = conv("constants_samples", parse_count) if "constants_samples" in keys else 10 ** 6
    try:
        cfg = ExperimentConfig(ConvexBody(body_kind, d), schedule, t_grid, reps, seed=seed, name=name, **kwargs)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in ("reps", "t_grid") if k in msg), "config")
        raise ConfigError(key, msg) from None
    return ExperimentEntry(cfg, n_const)


def parse_config(text: str) -> list[ExperimentEntry]:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    if not cp.sections():
        raise ConfigError("config", "no experiment sections")
    return [_section(name, cp[name]) for name in cp.sections()]


def bundled_configs() -> list[str]:
    root = resources.files("rggcross") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_config(name_or_path: str) -> list[ExperimentEntry]:
    """Read a config file, or a bundled config by name (e.g. ``ball-d3-thermo``)."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_config(path.read_text())
    if name_or_path in bundled_configs():
        return parse_config((resources.files("rggcross") / "configs" / f"{name_or_path}.ini").read_text())
    raise FileNotFoundError(f"no config file or bundled config named {name_or_path!r}")
