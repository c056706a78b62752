"""Run configuration: named profiles, TOML loading and strict validation.

A config is a nested mapping of sections.  Unknown sections or keys are
errors, every value is checked for type, and defaults are expanded so the
resolved mapping fully describes a run.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .plate import DESTRUCTION_LIMIT_Q1, CircularGeometry, PlateSpec

__all__ = [
    "ConfigError",
    "PROFILES",
    "DEFAULTS",
    "load_toml",
    "resolve",
    "config_hash",
    "plate_from_config",
    "complement_from_config",
    "geometry_from_config",
    "canonical_json",
]


class ConfigError(ValueError):
    """Malformed, incomplete or unknown configuration."""


PLATE_KEYS = (
    "young_modulus",
    "poisson",
    "density",
    "thickness",
    "tension_q1",
    "epsilon",
    "outer_radius",
    "beta",
    "resonance_nu",
)

_F = "float"
_I = "int"
_S = "str"
_B = "bool"
_FL = "float-list"
_PAIRS = "tuple-list"

SCHEMA: dict[str, dict[str, str]] = {
    "plate": {k: _F for k in PLATE_KEYS},
    "complement": {k: _F for k in PLATE_KEYS},
    "dispersion": {"nu_min": _F, "nu_max": _F, "count": _I, "order": _F, "modes": _I},
    "tune": {"mode": _S, "target_nu": _F, "mode_l": _I, "q1_max": _F},
    "scan": {"q1": _FL, "q1_min": _F, "q1_max": _F, "q1_count": _I},
    "beats": {
        "mass_small": _F,
        "stiffness_small": _F,
        "masses_large": _FL,
        "stiffnesses_large": _FL,
        "coupling": _FL,
        "beat_periods": _F,
        "samples": _I,
    },
    "transfer": {"detunings": _FL},
    "card": {
        "input": _S,
        "window_hours": _F,
        "stride_minutes": _F,
        "bin_width_uhz": _F,
        "f_min_uhz": _F,
        "f_max_uhz": _F,
        "svg": _B,
    },
    "synth": {
        "duration_hours": _F,
        "sample_interval": _F,
        "modes": _PAIRS,
        "beat_pairs": _PAIRS,
        "noise_std": _F,
    },
    "specfun": {"orders": _FL, "z": _FL},
}
TOP_LEVEL = {"profile": _S, "seed": _I}

PROFILES: dict[str, dict[str, dict[str, Any]]] = {
    "paper-2015": {
        "plate": {
            "young_modulus": 17.28e10,
            "poisson": 0.28,
            "density": 3380.0,
            "thickness": 3e4,
            "tension_q1": 3e9,
            "epsilon": 2.6e5,
            "outer_radius": 5e6,
            "beta": math.inf,
            "resonance_nu": 2e-4,
        },
        "complement": {"thickness": 1e5, "tension_q1": 0.0},
    }
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "plate": dict(PROFILES["paper-2015"]["plate"]),
    "complement": {"thickness": 1e5, "tension_q1": 0.0},
    "dispersion": {"nu_min": 1e-5, "nu_max": 1e-2, "count": 2048, "order": 0.0, "modes": 3},
    "tune": {"mode": "radius", "target_nu": 2e-4, "mode_l": 1, "q1_max": DESTRUCTION_LIMIT_Q1},
    "scan": {"q1_min": 0.0, "q1_max": 3e9, "q1_count": 31},
    "beats": {
        "mass_small": 1.0,
        "stiffness_small": 1.0,
        "masses_large": [1.0],
        "stiffnesses_large": [1.0],
        "coupling": [0.02],
        "beat_periods": 3.0,
        "samples": 4096,
    },
    "transfer": {"detunings": [0.0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04, 0.045]},
    "card": {
        "input": "",
        "window_hours": 20.0,
        "stride_minutes": 30.0,
        "bin_width_uhz": 0.0,
        "f_min_uhz": 0.0,
        "f_max_uhz": 1000.0,
        "svg": False,
    },
    "synth": {
        "duration_hours": 300.0,
        "sample_interval": 60.0,
        "modes": [],
        "beat_pairs": [[200.0, 10.0, 1e-3]],
        "noise_std": 0.0,
    },
    "specfun": {"orders": [0.0, 0.5, 1.0], "z": [0.5, 1.0, 3.9, 10.0, 20.0]},
}


def _coerce(section: str, key: str, kind: str, value: Any) -> Any:
    where = f"{section}.{key}" if section else key

    def num(v):
        if isinstance(v, bool):
            raise ConfigError(f"{where}: expected a number, got a boolean")
        if isinstance(v, (int, float)):
            return float(v)
        if isinstance(v, str) and v in ("inf", "-inf", "nan"):
            return float(v)
        raise ConfigError(f"{where}: expected a number, got {type(v).__name__}")

    if kind == _F:
        return num(value)
    if kind == _I:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return int(value)
    if kind == _S:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    if kind == _B:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false")
        return value
    if kind == _FL:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list of numbers")
        return [num(v) for v in value]
    if kind == _PAIRS:
        if not isinstance(value, list) or not all(isinstance(r, list) and len(r) == 3 for r in value):
            raise ConfigError(f"{where}: expected a list of 3-element lists")
        return [[num(v) for v in r] for r in value]
    raise AssertionError(kind)


def validate(raw: dict) -> dict:
    """Type-check a raw mapping against the schema; unknown keys are fatal."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table")
    out: dict[str, Any] = {}
    for key, value in raw.items():
        if key in TOP_LEVEL:
            out[key] = _coerce("", key, TOP_LEVEL[key], value)
        elif key in SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            sec = {}
            for k, v in value.items():
                if k not in SCHEMA[key]:
                    raise ConfigError(f"unknown key {key}.{k}")
                sec[k] = _coerce(key, k, SCHEMA[key][k], v)
            out[key] = sec
        else:
            raise ConfigError(f"unknown section or key {key!r}")
    if "profile" in out and out["profile"] not in PROFILES:
        raise ConfigError(f"unknown profile {out['profile']!r}; known: {sorted(PROFILES)}")
    return out


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return validate(raw)


def resolve(*layers: dict) -> dict:
    """Defaults, then the named profile, then each layer in turn."""
    cfg = copy.deepcopy(DEFAULTS)
    cfg["seed"] = 0
    merged: list[dict] = [validate(layer) for layer in layers]
    profile = next((layer["profile"] for layer in reversed(merged) if "profile" in layer), None)
    if profile is not None:
        for sec, vals in PROFILES[profile].items():
            cfg[sec].update(copy.deepcopy(vals))
        cfg["profile"] = profile
    for layer in merged:
        for key, value in layer.items():
            if isinstance(value, dict):
                cfg[key].update(value)
            else:
                cfg[key] = value
    # the complement inherits unspecified material constants from the active plate
    comp = {k: cfg["plate"][k] for k in PLATE_KEYS}
    comp.update(cfg["complement"])
    cfg["complement"] = comp
    return cfg


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def canonical_json(obj, indent: int | None = 2) -> str:
    """UTF-8 JSON with shortest round-trip floats; non-finite floats become strings."""
    return json.dumps(_jsonable(obj), indent=indent, ensure_ascii=False, allow_nan=False) + "\n"


def config_hash(cfg: dict) -> str:
    data = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(data).hexdigest()[:10]


def _plate(section: dict) -> PlateSpec:
    try:
        return PlateSpec(
            young_modulus=section["young_modulus"],
            poisson=section["poisson"],
            density=section["density"],
            thickness=section["thickness"],
            tension_q1=section["tension_q1"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def plate_from_config(cfg: dict) -> PlateSpec:
    return _plate(cfg["plate"])


def complement_from_config(cfg: dict) -> PlateSpec:
    return _plate(cfg["complement"])


def geometry_from_config(cfg: dict) -> CircularGeometry:
    try:
        return CircularGeometry(cfg["plate"]["epsilon"], cfg["plate"]["outer_radius"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
