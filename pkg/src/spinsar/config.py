"""Radar geometry, shared types, and config serialization.

The sensor is a vertical line array of A antennas mounted at arm radius r
from a vertical spin axis, rotating at constant angular speed. All angles
are radians and all lengths metres unless a name says otherwise; azimuth 0
is the +x axis and elevation is measured from the horizontal plane.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.constants import c as C_LIGHT

from .errors import FormatError, InvalidConfig

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    wrapped = np.mod(-np.asarray(angle) + math.pi, TWO_PI)
    out = -(wrapped - math.pi)
    return float(out) if np.isscalar(angle) else out


def _default_heights(wavelength_m: float, count: int = 8) -> tuple[float, ...]:
    """Antenna heights at half-wavelength spacing, bottom element at z=0."""
    return tuple(a * wavelength_m / 2.0 for a in range(count))


@dataclass(frozen=True)
class RadarConfig:
    """Physical and sampling parameters of the rotating radar.

    Defaults describe the reference unit: 8 antennas on an 80 mm arm
    spinning at two revolutions per second, 79 GHz FMCW with 4 GHz sweep,
    256 samples per chirp and 1200 chirps per rotation.
    """

    rotation_radius_m: float = 0.08
    angular_speed_rad_s: float = 4.0 * math.pi
    wavelength_m: float = 0.0038
    bandwidth_hz: float = 4.0e9
    samples_per_chirp: int = 256
    chirps_per_rotation: int = 1200
    antenna_heights_m: tuple[float, ...] | None = None
    max_range_m: float = 10.0
    fov_window_rad: float = math.pi / 2.0

    def __post_init__(self):
        if self.antenna_heights_m is None:
            object.__setattr__(
                self, "antenna_heights_m", _default_heights(self.wavelength_m)
            )
        else:
            object.__setattr__(
                self, "antenna_heights_m", tuple(float(h) for h in self.antenna_heights_m)
            )
        self._validate()

    def _validate(self):
        positive = [
            ("rotation_radius_m", self.rotation_radius_m),
            ("angular_speed_rad_s", self.angular_speed_rad_s),
            ("wavelength_m", self.wavelength_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("max_range_m", self.max_range_m),
        ]
        for name, value in positive:
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidConfig(f"{name} must be a positive finite number, got {value!r}")
        for name, value in [
            ("samples_per_chirp", self.samples_per_chirp),
            ("chirps_per_rotation", self.chirps_per_rotation),
        ]:
            if not (isinstance(value, int) and value >= 8):
                raise InvalidConfig(f"{name} must be an integer >= 8, got {value!r}")
        heights = self.antenna_heights_m
        if len(heights) < 1:
            raise InvalidConfig("antenna_heights_m must contain at least one element")
        if any(not math.isfinite(h) for h in heights):
            raise InvalidConfig("antenna_heights_m must be finite")
        if any(b <= a for a, b in zip(heights, heights[1:])):
            raise InvalidConfig("antenna_heights_m must be strictly increasing")
        if not (0.0 < self.fov_window_rad <= TWO_PI):
            raise InvalidConfig(
                f"fov_window_rad must lie in (0, 2*pi], got {self.fov_window_rad!r}"
            )

    # -- derived quantities ------------------------------------------------

    @property
    def num_antennas(self) -> int:
        return len(self.antenna_heights_m)

    @property
    def rotation_period_s(self) -> float:
        return TWO_PI / self.angular_speed_rad_s

    @property
    def prf_hz(self) -> float:
        """Chirp repetition frequency."""
        return self.chirps_per_rotation / self.rotation_period_s

    @property
    def range_bin_m(self) -> float:
        """Range extent of one FFT bin, c / (2 B)."""
        return C_LIGHT / (2.0 * self.bandwidth_hz)

    @property
    def unambiguous_range_m(self) -> float:
        """Largest range representable by the chirp FFT, N * c / (2 B)."""
        return self.samples_per_chirp * self.range_bin_m

    def chirp_times(self) -> np.ndarray:
        """Transmit times of the chirps of one rotation, seconds."""
        return np.arange(self.chirps_per_rotation) / self.prf_hz


@dataclass(frozen=True)
class Direction:
    """A look direction: azimuth in [0, 2*pi), elevation in [-pi/2, pi/2]."""

    azimuth_rad: float
    elevation_rad: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.azimuth_rad < TWO_PI):
            raise InvalidConfig(
                f"azimuth_rad must lie in [0, 2*pi), got {self.azimuth_rad!r}"
            )
        if not (-math.pi / 2 <= self.elevation_rad <= math.pi / 2):
            raise InvalidConfig(
                f"elevation_rad must lie in [-pi/2, pi/2], got {self.elevation_rad!r}"
            )


@dataclass(frozen=True)
class ResolutionReport:
    """Theoretical resolutions of a configuration."""

    azimuth_rad: float
    elevation_rad: float
    range_m: float


def antenna_position(cfg: RadarConfig, antenna: int, t: float) -> np.ndarray:
    """Position of one antenna at time t in the robot frame (no platform motion).

    The arm points at angle omega*t; antenna a sits at its configured height.
    """
    if not 0 <= antenna < cfg.num_antennas:
        raise InvalidConfig(
            f"antenna index {antenna} out of range for {cfg.num_antennas} antennas"
        )
    angle = cfg.angular_speed_rad_s * t
    return np.array(
        [
            cfg.rotation_radius_m * math.cos(angle),
            cfg.rotation_radius_m * math.sin(angle),
            cfg.antenna_heights_m[antenna],
        ]
    )


def direction_vector(direction: Direction) -> np.ndarray:
    """Unit vector for a look direction."""
    ce = math.cos(direction.elevation_rad)
    return np.array(
        [
            ce * math.cos(direction.azimuth_rad),
            ce * math.sin(direction.azimuth_rad),
            math.sin(direction.elevation_rad),
        ]
    )


def theoretical_resolutions(cfg: RadarConfig) -> ResolutionReport:
    """Closed-form resolution estimates.

    Azimuth follows the circular-aperture beamwidth 0.36 * lambda / r,
    elevation the uniform-line-array width 1.98 / A (half-wavelength
    spacing), range the FFT bin c / (2 B).
    """
    return ResolutionReport(
        azimuth_rad=0.36 * cfg.wavelength_m / cfg.rotation_radius_m,
        elevation_rad=1.98 / cfg.num_antennas,
        range_m=cfg.range_bin_m,
    )


# -- serialization ---------------------------------------------------------

_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RadarConfig)}


def config_to_dict(cfg: RadarConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["antenna_heights_m"] = list(cfg.antenna_heights_m)
    return out


def config_from_dict(data: dict) -> RadarConfig:
    if not isinstance(data, dict):
        raise FormatError(f"radar config must be a mapping, got {type(data).__name__}")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise FormatError(f"unknown radar config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "antenna_heights_m" in kwargs and kwargs["antenna_heights_m"] is not None:
        kwargs["antenna_heights_m"] = tuple(kwargs["antenna_heights_m"])
    for key in ("samples_per_chirp", "chirps_per_rotation"):
        if key in kwargs and isinstance(kwargs[key], float) and kwargs[key].is_integer():
            kwargs[key] = int(kwargs[key])
    try:
        return RadarConfig(**kwargs)
    except TypeError as exc:
        raise FormatError(f"bad radar config: {exc}") from exc


def save_config(cfg: RadarConfig, path: str | Path) -> None:
    """Write a config as YAML; keys match the RadarConfig field names."""
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)


def load_config(path: str | Path) -> RadarConfig:
    """Read a YAML config written by save_config (missing keys take defaults)."""
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return config_from_dict(data or {})
