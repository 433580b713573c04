"""Experiment configuration: INI files with flat key/value sections layered
over built-in profiles.

An empty config reproduces the full-scale setting; `profile = desk` in the
[experiment] section starts from a small scenario that trains in minutes.
"""
from __future__ import annotations

import configparser
import dataclasses
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelParams
from .env import MODES
from .errors import ConfigError
from .sac import SacConfig
from .scenario import ScenarioConfig


@dataclass
class ExperimentSpec:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    sac: SacConfig = field(default_factory=SacConfig)
    mode: str = "sac"
    modes: list[str] = field(default_factory=lambda: ["sac"])
    seeds: list[int] = field(default_factory=lambda: [0])
    out: str = "out"
    sweep_axis: str | None = None
    sweep_values: list[float] | None = None
    eval_episodes: int = 5
    figures: bool = True
    fix_scheduling: bool = False
    trace: bool = False

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"sweep mode {m!r} unknown")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.sweep_axis is not None:
            resolve_axis(self, self.sweep_axis)
            if not self.sweep_values:
                raise ConfigError("sweep_axis given without sweep_values")
        self.scenario.validate()
        self.channel.validate()
        self.sac.validate()


def resolve_axis(spec: ExperimentSpec, axis: str) -> tuple[str, str]:
    """Map an axis name ('K' or 'scenario.K') to (section, field)."""
    sections = {"scenario": spec.scenario, "channel": spec.channel, "sac": spec.sac}
    if "." in axis:
        section, name = axis.split(".", 1)
        if section not in sections:
            raise ConfigError(f"unknown config section {section!r} in sweep axis")
        if not hasattr(sections[section], name):
            raise ConfigError(f"unknown sweep axis field {axis!r}")
        return section, name
    for section, cfg in sections.items():
        if hasattr(cfg, axis):
            return section, axis
    raise ConfigError(f"unknown sweep axis field {axis!r}")


def apply_axis_value(spec: ExperimentSpec, axis: str, value: float) -> ExperimentSpec:
    section, name = resolve_axis(spec, axis)
    cfg = getattr(spec, section)
    current = getattr(cfg, name)
    cast = int(round(value)) if isinstance(current, int) else float(value)
    return replace(spec, **{section: cfg.with_overrides(**{name: cast})})


# ----------------------------------------------------------------------
# built-in profiles

def full_profile() -> ExperimentSpec:
    """Full-scale defaults: 20 users, 5 UAVs, 5 types, 600 episodes."""
    return ExperimentSpec()


def desk_profile() -> ExperimentSpec:
    """Small scenario that trains in minutes on a laptop.

    Scaled so every control the policy owns carries visible weight and the
    reward optimum is timeout-free for all operating modes:
      - micro-class UAVs (propulsion ~10x below the full-scale airframe),
        otherwise hover power drowns out the offloading energies;
      - 1-2 Mb tasks, so finishing on time is always cheaper than eating the
        timeout multiplier by under-clocking the compute;
      - service footprints sized so each UAV hosts exactly one of the two
        services, which pins tasks to their service's host and keeps the
        equal-split baseline from hiding its handicap by re-routing.
    """
    gb = 8e9
    scenario = ScenarioConfig(
        K=5, M=2, Z=2, T=200,
        P0=5.903, P1=7.907, A_rotor=0.0503,
        D_min=1.2e6, D_max=1.8e6,
        c_z=np.array([600.0, 1200.0]),
        a_z=np.array([6 * gb, 6 * gb]), b_z=np.array([300 * gb, 300 * gb]),
        A_m=np.array([8 * gb, 8 * gb]), B_m=np.array([400 * gb, 400 * gb]),
    )
    sac = SacConfig(episodes=300, hidden=(128, 128), updates_per_episode=96)
    return ExperimentSpec(scenario=scenario, sac=sac)


def trend_profile() -> ExperimentSpec:
    """Evaluation profile for user/UAV-count trends.

    Propulsion is made negligible so the trends reflect the offload pipeline
    (the regime where adding UAVs reduces energy).
    """
    spec = desk_profile()
    # sampled footprints/budgets again: the trend sweeps change M and Z
    scenario = spec.scenario.with_overrides(
        P0=1e-3, P1=1e-3, a_z=None, b_z=None, A_m=None, B_m=None)
    sac = spec.sac.with_overrides(episodes=60, hidden=(64, 64),
                                  updates_per_episode=48)
    return replace(spec, scenario=scenario, sac=sac)


PROFILES = {"full": full_profile, "desk": desk_profile, "trend": trend_profile}


# ----------------------------------------------------------------------
# INI loading

_LIST_FIELDS = {"a_z", "b_z", "c_z", "A_m", "B_m"}
_TUPLE_FIELDS = {"A_range", "B_range", "hidden"}


def _coerce(name: str, raw: str, default):
    raw = raw.strip()
    if name in _LIST_FIELDS:
        if raw.lower() in ("none", "sampled"):
            return None
        return np.array([float(v) for v in raw.split(",")])
    if name in _TUPLE_FIELDS:
        parts = [v for v in raw.replace(" ", "").split(",") if v]
        if name == "hidden":
            return tuple(int(v) for v in parts)
        return tuple(float(v) for v in parts)
    if default is None or isinstance(default, str):
        return raw
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def _apply_section(cfg, section: configparser.SectionProxy, label: str):
    values = {}
    for key, raw in section.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown key {key!r} in [{label}]")
        default = getattr(cfg, key)
        try:
            values[key] = _coerce(key, raw, default)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {label}.{key}: {exc}") from exc
    return replace(cfg, **values) if values else cfg


def load_spec(path: str | os.PathLike | None) -> ExperimentSpec:
    """Load an ExperimentSpec from an INI file (None -> full-scale defaults)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive (K vs kappa etc.)
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    profile_name = "full"
    if parser.has_section("experiment") and parser.has_option("experiment", "profile"):
        profile_name = parser.get("experiment", "profile").strip()
        if profile_name not in PROFILES:
            raise ConfigError(
                f"unknown profile {profile_name!r}; choose from {sorted(PROFILES)}")
    spec = PROFILES[profile_name]()

    if parser.has_section("scenario"):
        spec = replace(spec, scenario=_apply_section(
            spec.scenario, parser["scenario"], "scenario"))
    if parser.has_section("channel"):
        spec = replace(spec, channel=_apply_section(
            spec.channel, parser["channel"], "channel"))
    if parser.has_section("sac"):
        spec = replace(spec, sac=_apply_section(spec.sac, parser["sac"], "sac"))
    if parser.has_section("experiment"):
        exp = parser["experiment"]
        values = {}
        for key, raw in exp.items():
            if key == "profile":
                continue
            if key == "seeds":
                values["seeds"] = [int(v) for v in raw.split(",") if v.strip()]
            elif key == "modes":
                values["modes"] = [v.strip() for v in raw.split(",") if v.strip()]
            elif key == "sweep_values":
                values["sweep_values"] = [float(v) for v in raw.split(",") if v.strip()]
            elif hasattr(spec, key):
                values[key] = _coerce(key, raw, getattr(spec, key))
            else:
                raise ConfigError(f"unknown key {key!r} in [experiment]")
        spec = replace(spec, **values)
    spec.validate()
    return spec


def spec_to_manifest(spec: ExperimentSpec, seed: int, extra: dict | None = None) -> dict:
    """Fully resolved run manifest, JSON-serializable."""
    def as_dict(cfg):
        out = {}
        for f in dataclasses.fields(cfg):
            v = getattr(cfg, f.name)
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    from . import __version__

    manifest = {
        "version": __version__,
        "seed": seed,
        "mode": spec.mode,
        "scenario": as_dict(spec.scenario),
        "channel": as_dict(spec.channel),
        "sac": as_dict(spec.sac),
        "eval_episodes": spec.eval_episodes,
        "fix_scheduling": spec.fix_scheduling,
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_manifest(path, spec: ExperimentSpec, seed: int, extra: dict | None = None):
    with open(path, "w") as fh:
        json.dump(spec_to_manifest(spec, seed, extra), fh, indent=1)
