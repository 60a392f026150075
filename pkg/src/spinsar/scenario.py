"""Scenario files: a single YAML document driving simulate/image/pipeline.

Schema (version 1, all values SI with radians; unknown keys rejected):

    schema_version: 1
    seed: 42                  # required; feeds every stochastic stage
    noise_std: 0.05
    radar: {rotation_radius_m: ..., ...}        # RadarConfig fields
    pattern: {kind: cosine_power, exponent: ..., cutoff_rad: ...}
    reflectors:
      - {range_m: 3.0, azimuth_rad: 0.7, elevation_rad: 0.0, amplitude: 1.0}
    trajectory: {speed_m_s: 0.4, heading_rad: 1.0}
    grid: {azimuth_bins: 512, ...}              # ImagingGrid fields
    cfar: {guard: 2, train: 8, pfa: 1.0e-4}
    motion_estimation: {num_gates: 8, min_range_m: 0.5, threshold: 0.4,
                        window_len: ..., hop: ..., seed: ..., iterations: ...}

A provenance sidecar written next to an output wraps the resolved scenario
under a top-level ``scenario:`` key; the loader unwraps it, so a sidecar
can be fed back anywhere a scenario file is accepted.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .config import RadarConfig, config_from_dict, config_to_dict
from .errors import FormatError, SceneError
from .imaging import ImagingGrid
from .pointcloud import PointCloud
from .scene import RadiationPattern, Reflector, Trajectory

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "schema_version",
    "seed",
    "noise_std",
    "radar",
    "pattern",
    "reflectors",
    "trajectory",
    "grid",
    "cfar",
    "motion_estimation",
}
_MOTION_KEYS = {
    "num_gates",
    "min_range_m",
    "window_len",
    "hop",
    "threshold",
    "seed",
    "iterations",
    "inlier_threshold_hz",
    "min_inlier_ratio",
}
_CFAR_KEYS = {"guard", "train", "pfa"}


@dataclass
class Scenario:
    cfg: RadarConfig
    reflectors: list[Reflector]
    trajectory: Trajectory
    pattern: RadiationPattern | None
    noise_std: float
    seed: int
    grid: ImagingGrid
    cfar: dict = field(default_factory=dict)
    motion_estimation: dict = field(default_factory=dict)

    def truth_cloud(self) -> PointCloud:
        """Ground-truth point cloud of the reflectors at t=0."""
        if not self.reflectors:
            return PointCloud(points=[], intensity=[])
        return PointCloud(
            points=[r.position() for r in self.reflectors],
            intensity=[r.amplitude for r in self.reflectors],
        )


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise FormatError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise FormatError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


def scenario_from_dict(data: dict, where: str = "scenario") -> Scenario:
    if not isinstance(data, dict):
        raise FormatError(f"{where}: document must be a mapping")
    if "scenario" in data:  # provenance sidecar wrapper
        return scenario_from_dict(data["scenario"], where=f"{where}.scenario")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise FormatError(f"{where}: unknown keys {sorted(unknown)}")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FormatError(
            f"{where}: schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )
    if "seed" not in data or not isinstance(data["seed"], int):
        raise FormatError(f"{where}: an integer 'seed' is required")

    try:
        cfg = config_from_dict(data.get("radar") or {})
    except FormatError as exc:
        raise FormatError(f"{where}.radar: {exc}") from exc

    reflectors = []
    for i, entry in enumerate(data.get("reflectors") or []):
        try:
            reflectors.append(_build(Reflector, entry, f"{where}.reflectors[{i}]"))
        except SceneError as exc:
            raise FormatError(f"{where}.reflectors[{i}]: {exc}") from exc

    try:
        trajectory = _build(Trajectory, data.get("trajectory") or {}, f"{where}.trajectory")
    except SceneError as exc:
        raise FormatError(f"{where}.trajectory: {exc}") from exc

    pattern = None
    if data.get("pattern") is not None:
        pattern = _build(RadiationPattern, data["pattern"], f"{where}.pattern")

    grid = _build(ImagingGrid, data.get("grid") or {}, f"{where}.grid")

    noise_std = data.get("noise_std", 0.0)
    if not isinstance(noise_std, (int, float)) or noise_std < 0:
        raise FormatError(f"{where}.noise_std: must be a number >= 0, got {noise_std!r}")

    cfar = data.get("cfar") or {}
    if not isinstance(cfar, dict) or set(cfar) - _CFAR_KEYS:
        raise FormatError(f"{where}.cfar: unknown or malformed keys")
    motion_est = data.get("motion_estimation") or {}
    if not isinstance(motion_est, dict) or set(motion_est) - _MOTION_KEYS:
        raise FormatError(f"{where}.motion_estimation: unknown or malformed keys")

    return Scenario(
        cfg=cfg,
        reflectors=reflectors,
        trajectory=trajectory,
        pattern=pattern,
        noise_std=float(noise_std),
        seed=data["seed"],
        grid=grid,
        cfar=dict(cfar),
        motion_estimation=dict(motion_est),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Parse a scenario (or sidecar) file with line-numbered YAML errors."""
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    try:
        return scenario_from_dict(data if data is not None else {})
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def scenario_to_dict(s: Scenario) -> dict:
    out: dict = {
        "schema_version": SCHEMA_VERSION,
        "seed": s.seed,
        "noise_std": s.noise_std,
        "radar": config_to_dict(s.cfg),
        "reflectors": [dataclasses.asdict(r) for r in s.reflectors],
        "trajectory": dataclasses.asdict(s.trajectory),
        "grid": dataclasses.asdict(s.grid),
    }
    if s.pattern is not None:
        out["pattern"] = dataclasses.asdict(s.pattern)
    if s.cfar:
        out["cfar"] = dict(s.cfar)
    if s.motion_estimation:
        out["motion_estimation"] = dict(s.motion_estimation)
    return out


def save_scenario(s: Scenario, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(scenario_to_dict(s), fh, sort_keys=False)
