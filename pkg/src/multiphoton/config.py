"""Run configuration: JSON with explicit units in every key name."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .model import LadderSystem, alternating_parity
from .units import ExperimentalParams, parameter_chain

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCHEMA = _obj({
    "system": _obj({
        "level_energies_eV": {"type": "array", "items": _NUM, "minItems": 2},
        "parities": {"type": "array", "items": {"enum": ["even", "odd"]}},
        "coupling_b_rad_s": _NONNEG,
        "coupling_ratios": {"type": "array", "items": _NONNEG},
    }, ["level_energies_eV"]),
    "parameters": _obj({
        "radiative_lifetime_ps": _POS,
        "transition_energy_eV": _POS,
        "refractive_index": {"type": "number", "minimum": 1},
        "avg_power_density_W_m2": _POS,
        "rep_rate_Hz": _POS,
        "pulse_duration_fs": _POS,
        "field_override_V_m": _POS,
    }),
    "drive": _obj({
        "amplitude_scale": _NUM,
        "carrier_phase_rad": _NUM,
    }),
    "scan": _obj({
        "start_eV": _POS,
        "stop_eV": _POS,
        "step_eV": _POS,
        "convolution_fwhm_eV": _NONNEG,
        "from_level": {"type": "integer", "minimum": 0},
        "to_level": {"type": "integer", "minimum": 0},
        "refine": {"type": "boolean"},
    }, ["start_eV", "stop_eV", "step_eV"]),
    "pulse": _obj({
        "duration_fwhm_fs": _POS,
        "peak_scale": _NUM,
        "center_energy_eV": _POS,
        "scales": {"type": "array", "items": _NUM},
        "start_eV": _POS,
        "stop_eV": _POS,
        "step_eV": _POS,
        "level": {"type": "integer", "minimum": 0},
    }, ["duration_fwhm_fs"]),
    "fit": _obj({
        "input_path": {"type": "string"},
        "model": {"enum": ["power", "malus", "emg"]},
        "options": _obj({
            "sigma_ps": _POS,
            "degrees": {"type": "boolean"},
        }),
    }, ["model"]),
    "output": _obj({
        "directory": {"type": "string"},
        "formats": {"type": "array", "items": {"enum": ["csv", "json"]}},
    }),
}, ["system"])


class ConfigError(ValueError):
    """Invalid configuration; message carries the line or key path."""


def bundled_config_path(name: str) -> Path:
    return Path(str(resources.files("multiphoton") / "configs" / f"{name}.json"))


def bundled_data_path(name: str) -> Path:
    return Path(str(resources.files("multiphoton") / "data" / name))


def load_config(path_or_name) -> dict:
    """Parse and validate; a bare name (``canonical``) selects a bundled config."""
    p = Path(path_or_name)
    if not p.exists() and not p.suffix:
        p = bundled_config_path(str(path_or_name))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path_or_name}: cannot read ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    validate_config(raw, source=str(p))
    return raw


def validate_config(raw: dict, source: str = "<config>") -> None:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        key = "/".join(str(k) for k in exc.absolute_path) or "<root>"
        raise ConfigError(f"{source}: key '{key}': {exc.message}") from None
    sysb = raw["system"]
    n = len(sysb["level_energies_eV"])
    if "parities" in sysb and len(sysb["parities"]) != n:
        raise ConfigError(f"{source}: key 'system/parities': need {n} entries")
    ratios = sysb.get("coupling_ratios")
    if ratios is not None and len(ratios) != n - 1:
        raise ConfigError(f"{source}: key 'system/coupling_ratios': need {n - 1} entries")
    if "coupling_b_rad_s" not in sysb and "parameters" not in raw:
        raise ConfigError(f"{source}: key 'system/coupling_b_rad_s': required unless a "
                          "'parameters' block derives it")


def experimental_params(raw: dict) -> tuple[ExperimentalParams, float | None]:
    pb = raw.get("parameters", {})
    defaults = ExperimentalParams()
    params = ExperimentalParams(
        radiative_lifetime=pb.get("radiative_lifetime_ps", defaults.radiative_lifetime * 1e12) * 1e-12,
        transition_energy=pb.get("transition_energy_eV", defaults.transition_energy),
        refractive_index=pb.get("refractive_index", defaults.refractive_index),
        avg_power_density=pb.get("avg_power_density_W_m2", defaults.avg_power_density),
        rep_rate=pb.get("rep_rate_Hz", defaults.rep_rate),
        pulse_duration_fwhm=pb.get("pulse_duration_fs", defaults.pulse_duration_fwhm * 1e15) * 1e-15,
    )
    return params, pb.get("field_override_V_m")


def resolve(raw: dict) -> dict:
    """Fill defaults so the manifest records every value the run used."""
    cfg = copy.deepcopy(raw)
    sysb = cfg["system"]
    n = len(sysb["level_energies_eV"])
    sysb.setdefault("parities", list(alternating_parity(n)))
    sysb.setdefault("coupling_ratios", [1.0] + [0.0] * (n - 2))
    if "coupling_b_rad_s" not in sysb:
        params, override = experimental_params(cfg)
        sysb["coupling_b_rad_s"] = parameter_chain(params, override)["b_rad_s"]
    cfg.setdefault("drive", {})
    cfg["drive"].setdefault("amplitude_scale", 1.0)
    cfg["drive"].setdefault("carrier_phase_rad", 0.0)
    if "scan" in cfg:
        s = cfg["scan"]
        s.setdefault("convolution_fwhm_eV", 0.020)
        s.setdefault("from_level", 0)
        s.setdefault("to_level", 1)
        s.setdefault("refine", True)
    if "pulse" in cfg:
        p = cfg["pulse"]
        p.setdefault("peak_scale", 1.0)
        p.setdefault("level", 1)
    cfg.setdefault("output", {})
    cfg["output"].setdefault("directory", "out")
    cfg["output"].setdefault("formats", ["csv", "json"])
    return cfg


def build_system(cfg: dict) -> LadderSystem:
    s = cfg["system"]
    b = s["coupling_b_rad_s"]
    return LadderSystem(tuple(s["level_energies_eV"]), tuple(s["parities"]),
                        tuple(b * r for r in s["coupling_ratios"]))


def make_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid start, start+step, ..., free of accumulated round-off."""
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    if n <= 0:
        return np.empty(0)
    return start + step * np.arange(n)


@dataclass
class RunConfig:
    raw: dict
    resolved: dict
    system: LadderSystem

    @classmethod
    def load(cls, path_or_name) -> "RunConfig":
        raw = load_config(path_or_name)
        resolved = resolve(raw)
        try:
            system = build_system(resolved)
        except ValueError as exc:
            raise ConfigError(f"{path_or_name}: key 'system': {exc}") from None
        return cls(raw, resolved, system)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        validate_config(raw)
        resolved = resolve(raw)
        try:
            system = build_system(resolved)
        except ValueError as exc:
            raise ConfigError(f"key 'system': {exc}") from None
        return cls(raw, resolved, system)

    def section(self, name: str) -> dict:
        if name not in self.resolved:
            raise ConfigError(f"key '{name}': block required for this command")
        return self.resolved[name]
