"""Run and sweep configuration: strict YAML parsing plus canonical hashing.

Configs are plain YAML mappings whose keys mirror the dataclass field
names.  Parsing is strict: unknown keys and missing required keys fail
before any simulation starts, with the offending section and field named
in the error.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import locomotion, solver, tendon
from .geometry import DEFAULT_N_SEGMENTS, BeamSpec, preset, PRESET_NAMES
from .locomotion import GroundModel
from .tendon import ActuationProfile


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


# Reference design grid: the sweep defaults cover it exactly.
GRID_BEAMS = ("S_62", "S_64", "S_66")
GRID_DELTA_L = (0.0, 5.0, 10.0, 15.0)
GRID_DELTA_TAU = (15.0, 20.0, 25.0, 30.0, 35.0, 40.0)
GRID_REPETITIONS = 10


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation needs, in design units (mm, s)."""

    beam: BeamSpec
    beam_id: str = "custom"
    tendon_stiffness: float = tendon.DEFAULT_TENDON_STIFFNESS
    actuation: ActuationProfile = field(
        default_factory=lambda: ActuationProfile(delta_L=10.0, delta_tau=35.0))
    # solver section
    dt_factor: float = solver.DEFAULT_DT_FACTOR
    global_viscous_damping: float = solver.DEFAULT_VISCOUS_DAMPING
    bench_friction_mu: float = tendon.DEFAULT_BENCH_FRICTION_MU
    quadratic_drag: float = 0.0
    seed: int = 0
    n_segments: int = DEFAULT_N_SEGMENTS
    # ground section (locomotion runs)
    ground: GroundModel = field(default_factory=GroundModel)
    # output section
    output_dir: str = "out"
    sample_rate: float = 100.0

    def __post_init__(self):
        if self.tendon_stiffness <= 0:
            raise ConfigError("tendon_stiffness must be > 0")
        if self.dt_factor <= 0 or self.dt_factor > 1:
            raise ConfigError("dt_factor must be in (0, 1]")
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be > 0")
        if self.n_segments < 8:
            raise ConfigError("n_segments must be >= 8")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")


@dataclass(frozen=True)
class SweepPlan:
    """Grid of (beam, delta_L, delta_tau) combinations with repetitions."""

    beams: tuple[str, ...] = GRID_BEAMS
    delta_L_list: tuple[float, ...] = GRID_DELTA_L
    delta_tau_list: tuple[float, ...] = GRID_DELTA_TAU
    repetitions: int = GRID_REPETITIONS

    def __post_init__(self):
        for b in self.beams:
            if b not in PRESET_NAMES:
                raise ConfigError(f"unknown beam {b!r} in sweep plan")
        if not self.beams or not self.delta_L_list or not self.delta_tau_list:
            raise ConfigError("sweep plan axes must be non-empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if any(dl < 0 for dl in self.delta_L_list):
            raise ConfigError("delta_L values must be >= 0")
        if any(dt <= 0 for dt in self.delta_tau_list):
            raise ConfigError("delta_tau values must be > 0")

    def combinations(self):
        for b in self.beams:
            for dl in self.delta_L_list:
                for dt in self.delta_tau_list:
                    yield b, float(dl), float(dt)


def _take(section: dict, name: str, allowed: set[str], where: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in section {where!r}; "
            f"allowed: {sorted(allowed)}")
    return section


def _load_yaml(path) -> dict:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


_BEAM_KEYS = {"name", "length_L", "height_H", "thickness_dA", "thickness_dB",
              "taper", "youngs_modulus", "density", "rayleigh_damping"}
_ACT_KEYS = {"delta_L", "delta_tau", "waveform", "period", "n_cycles",
             "precompress_ramp", "drive_lag"}
_SOLVER_KEYS = {"dt_factor", "global_viscous_damping", "bench_friction_mu",
                "quadratic_drag", "seed", "n_segments"}
_GROUND_KEYS = {"mode", "c_longitudinal", "c_lateral", "coulomb_normal_load",
                "mu_longitudinal", "mu_lateral"}
_OUTPUT_KEYS = {"directory", "sample_rate"}
_TOP_KEYS = {"beam", "tendon", "actuation", "solver", "ground", "output"}


def _beam_from_section(sec: dict) -> tuple[BeamSpec, str]:
    _take(sec, "beam", _BEAM_KEYS, "beam")
    sec = dict(sec)
    name = sec.pop("name", None)
    if "rayleigh_damping" in sec:
        sec["rayleigh_damping"] = tuple(sec["rayleigh_damping"])
    if name is not None:
        if name not in PRESET_NAMES:
            raise ConfigError(f"beam.name must be one of {PRESET_NAMES}")
        return preset(name, **sec), name
    required = {"length_L", "height_H", "thickness_dA", "thickness_dB"}
    missing = required - set(sec)
    if missing:
        raise ConfigError(f"beam section missing {sorted(missing)} "
                          "(or give beam.name)")
    return BeamSpec(**sec), "custom"


def load_run_config(path) -> RunConfig:
    """Parse a YAML run config; strict about structure and values."""
    data = _take(_load_yaml(path), "top", _TOP_KEYS, "top-level")
    if "beam" not in data:
        raise ConfigError("missing required section 'beam'")
    if "actuation" not in data:
        raise ConfigError("missing required section 'actuation'")

    beam, beam_id = _beam_from_section(data["beam"])

    act_sec = _take(data["actuation"], "actuation", _ACT_KEYS, "actuation")
    missing = {"delta_L", "delta_tau"} - set(act_sec)
    if missing:
        raise ConfigError(f"actuation section missing {sorted(missing)}")
    try:
        actuation = ActuationProfile(**act_sec)
    except ValueError as e:
        raise ConfigError(f"actuation: {e}") from e

    kwargs: dict = {}
    tend = _take(data.get("tendon", {}), "tendon", {"stiffness"}, "tendon")
    if "stiffness" in tend:
        kwargs["tendon_stiffness"] = float(tend["stiffness"])

    sol = _take(data.get("solver", {}), "solver", _SOLVER_KEYS, "solver")
    kwargs.update({k: sol[k] for k in sol})

    if "ground" in data:
        g = _take(data["ground"], "ground", _GROUND_KEYS, "ground")
        try:
            kwargs["ground"] = GroundModel(**g)
        except ValueError as e:
            raise ConfigError(f"ground: {e}") from e

    out = _take(data.get("output", {}), "output", _OUTPUT_KEYS, "output")
    if "directory" in out:
        kwargs["output_dir"] = str(out["directory"])
    if "sample_rate" in out:
        kwargs["sample_rate"] = float(out["sample_rate"])

    try:
        return RunConfig(beam=beam, beam_id=beam_id, actuation=actuation,
                         **kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from e


_PLAN_KEYS = {"beams", "delta_L_list", "delta_tau_list", "repetitions"}


def load_sweep_plan(path) -> SweepPlan:
    data = _take(_load_yaml(path), "plan", _PLAN_KEYS, "sweep plan")
    kwargs: dict = {}
    for k in ("beams", "delta_L_list", "delta_tau_list"):
        if k in data:
            kwargs[k] = tuple(data[k])
    if "repetitions" in data:
        kwargs["repetitions"] = int(data["repetitions"])
    try:
        return SweepPlan(**kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _canonical(obj):
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    return obj


def config_hash(cfg: RunConfig) -> str:
    """Stable short hex digest of every physics-relevant field."""
    payload = {
        "beam": {
            "length_L": cfg.beam.length_L, "height_H": cfg.beam.height_H,
            "thickness_dA": cfg.beam.thickness_dA,
            "thickness_dB": cfg.beam.thickness_dB, "taper": cfg.beam.taper,
            "youngs_modulus": cfg.beam.youngs_modulus,
            "density": cfg.beam.density,
            "rayleigh_damping": list(cfg.beam.rayleigh_damping),
        },
        "tendon_stiffness": cfg.tendon_stiffness,
        "actuation": {
            "delta_L": cfg.actuation.delta_L,
            "delta_tau": cfg.actuation.delta_tau,
            "waveform": cfg.actuation.waveform,
            "period": cfg.actuation.period,
            "n_cycles": cfg.actuation.n_cycles,
            "precompress_ramp": cfg.actuation.precompress_ramp,
            "drive_lag": cfg.actuation.drive_lag,
        },
        "solver": {
            "dt_factor": cfg.dt_factor,
            "global_viscous_damping": cfg.global_viscous_damping,
            "bench_friction_mu": cfg.bench_friction_mu,
            "quadratic_drag": cfg.quadratic_drag,
            "n_segments": cfg.n_segments,
        },
        "ground": {
            "mode": cfg.ground.mode,
            "c_longitudinal": cfg.ground.c_longitudinal,
            "c_lateral": cfg.ground.c_lateral,
            "coulomb_normal_load": cfg.ground.coulomb_normal_load,
            "mu_longitudinal": cfg.ground.mu_longitudinal,
            "mu_lateral": cfg.ground.mu_lateral,
        },
        "sample_rate": cfg.sample_rate,
    }
    blob = json.dumps(_canonical(payload), sort_keys=True,
                      separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
