"""Scene description and FMCW intermediate-frequency signal simulation.

Reflectors are ideal points in the robot frame at t=0. The simulator
produces the dechirped IF samples for every antenna and chirp of one
rotation, including arm rotation, optional constant-velocity platform
motion, the antenna radiation pattern, and circular Gaussian noise.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RadarConfig, TWO_PI, wrap_angle
from .errors import FormatError, InvalidConfig, SceneError

_CUBE_MAGIC = b"RRCUBE\0\0"
_CUBE_VERSION = 1
_CUBE_HEADER = struct.Struct("<8s4I4dQ")  # magic, ver, A, T, N, r, omega, lambda, B, seed

# Exponent giving a 30 deg two-sided half-power beamwidth:
# amplitude gain cos(15 deg)^k = 2**-0.5  =>  power halves at +-15 deg.
_DEFAULT_EXPONENT = 0.5 * math.log(2.0) / -math.log(math.cos(math.radians(15.0)))


@dataclass(frozen=True)
class Reflector:
    """Point reflector in spherical robot-frame coordinates at t=0."""

    range_m: float
    azimuth_rad: float
    elevation_rad: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.range_m) and self.range_m > 0):
            raise SceneError(f"reflector range_m must be positive, got {self.range_m!r}")
        if not (0.0 <= self.azimuth_rad < TWO_PI):
            raise SceneError(
                f"reflector azimuth_rad must lie in [0, 2*pi), got {self.azimuth_rad!r}"
            )
        if not (-math.pi / 2 <= self.elevation_rad <= math.pi / 2):
            raise SceneError(
                f"reflector elevation_rad must lie in [-pi/2, pi/2], "
                f"got {self.elevation_rad!r}"
            )
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise SceneError(f"reflector amplitude must be positive, got {self.amplitude!r}")

    def position(self) -> np.ndarray:
        """Cartesian position (x, y, z)."""
        ce = math.cos(self.elevation_rad)
        return np.array(
            [
                self.range_m * ce * math.cos(self.azimuth_rad),
                self.range_m * ce * math.sin(self.azimuth_rad),
                self.range_m * math.sin(self.elevation_rad),
            ]
        )


@dataclass(frozen=True)
class Trajectory:
    """Constant-velocity planar platform motion."""

    speed_m_s: float = 0.0
    heading_rad: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.speed_m_s) and self.speed_m_s >= 0):
            raise SceneError(f"speed_m_s must be >= 0, got {self.speed_m_s!r}")
        if not math.isfinite(self.heading_rad):
            raise SceneError(f"heading_rad must be finite, got {self.heading_rad!r}")
        object.__setattr__(self, "heading_rad", self.heading_rad % TWO_PI)

    def velocity(self) -> np.ndarray:
        """Velocity vector (vx, vy)."""
        return np.array(
            [
                self.speed_m_s * math.cos(self.heading_rad),
                self.speed_m_s * math.sin(self.heading_rad),
            ]
        )


@dataclass(frozen=True)
class RadiationPattern:
    """Azimuthal antenna gain model; flat in elevation.

    ``cutoff_rad`` is the half-angle beyond which the gain is exactly zero
    (hard field-of-view edge). ``cosine_power`` applies an amplitude gain
    cos(offset)**exponent inside the cutoff; ``omni`` is 1 inside it.
    """

    kind: str = "cosine_power"
    exponent: float = _DEFAULT_EXPONENT
    cutoff_rad: float = math.pi / 4.0

    def __post_init__(self):
        if self.kind not in ("cosine_power", "omni"):
            raise InvalidConfig(f"unknown radiation pattern kind {self.kind!r}")
        if not (math.isfinite(self.exponent) and self.exponent >= 0):
            raise InvalidConfig(f"pattern exponent must be >= 0, got {self.exponent!r}")
        if not (0.0 < self.cutoff_rad <= math.pi):
            raise InvalidConfig(
                f"pattern cutoff_rad must lie in (0, pi], got {self.cutoff_rad!r}"
            )

    @classmethod
    def from_half_power_width(cls, width_rad: float, cutoff_rad: float = math.pi / 4.0):
        """Cosine-power pattern whose two-sided 3 dB power width is width_rad."""
        if not (0 < width_rad < math.pi):
            raise InvalidConfig(f"width_rad must lie in (0, pi), got {width_rad!r}")
        exponent = 0.5 * math.log(2.0) / -math.log(math.cos(width_rad / 2.0))
        return cls(kind="cosine_power", exponent=exponent, cutoff_rad=cutoff_rad)

    def gain(self, offset_rad):
        """Amplitude gain for a boresight offset (scalar or array), in [0, 1]."""
        off = np.abs(wrap_angle(np.asarray(offset_rad, dtype=float)))
        if self.kind == "omni":
            g = np.ones_like(off)
        else:
            g = np.maximum(np.cos(off), 0.0) ** self.exponent
        g = np.where(off <= self.cutoff_rad, g, 0.0)
        return float(g) if np.isscalar(offset_rad) else g


DEFAULT_PATTERN = RadiationPattern()


@dataclass
class RawCube:
    """Dechirped IF samples, shape (antennas, chirps, samples), complex128."""

    samples: np.ndarray
    cfg: RadarConfig
    seed: int = 0

    def __post_init__(self):
        expected = (
            self.cfg.num_antennas,
            self.cfg.chirps_per_rotation,
            self.cfg.samples_per_chirp,
        )
        if self.samples.shape != expected:
            raise SceneError(
                f"cube shape {self.samples.shape} does not match config {expected}"
            )


def antenna_positions_xy(
    cfg: RadarConfig, times: np.ndarray, trajectory: Trajectory | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Planar arm-tip coordinates at each time, platform displacement included."""
    angle = cfg.angular_speed_rad_s * times
    x = cfg.rotation_radius_m * np.cos(angle)
    y = cfg.rotation_radius_m * np.sin(angle)
    if trajectory is not None and trajectory.speed_m_s > 0:
        vx, vy = trajectory.velocity()
        x = x + vx * times
        y = y + vy * times
    return x, y


def exact_distance(reflector: Reflector, antenna_xyz: np.ndarray) -> float:
    """Euclidean distance from an antenna position to a reflector."""
    return float(np.linalg.norm(reflector.position() - np.asarray(antenna_xyz)))


def approx_distance(
    reflector: Reflector, cfg: RadarConfig, trajectory: Trajectory, t: float
) -> float:
    """First-order planar distance model used by the ego-motion analysis.

    d(t) ~ R - r*cos(omega*t - theta) - v*t*cos(heading - theta). Valid for
    R much larger than both the arm radius and the platform displacement.
    """
    theta = reflector.azimuth_rad
    rot = cfg.rotation_radius_m * math.cos(cfg.angular_speed_rad_s * t - theta)
    adv = trajectory.speed_m_s * t * math.cos(trajectory.heading_rad - theta)
    return reflector.range_m - rot - adv


def simulate(
    reflectors: list[Reflector],
    cfg: RadarConfig,
    trajectory: Trajectory | None = None,
    pattern: RadiationPattern | None = None,
    noise_std: float = 0.0,
    seed: int = 0,
) -> RawCube:
    """Simulate one rotation of dechirped IF data.

    Each reflector contributes, per antenna a, chirp time t and fast-time
    sample n, the phasor

        amplitude * gain * exp{ j 2 pi (d / (N dr) * n + 2 d / lambda) }

    where d is the exact antenna-to-reflector distance at the chirp time
    and dr = c / (2 B) the range bin. noise_std sets the standard deviation
    of the complex noise magnitude per sample; each chirp draws from its
    own RNG substream spawned from the seed.
    """
    if pattern is None:
        pattern = DEFAULT_PATTERN
    if trajectory is None:
        trajectory = Trajectory()
    if noise_std < 0:
        raise SceneError(f"noise_std must be >= 0, got {noise_std!r}")
    limit = min(cfg.max_range_m, cfg.unambiguous_range_m)
    for i, refl in enumerate(reflectors):
        if refl.range_m > limit:
            raise SceneError(
                f"reflector {i} at range {refl.range_m:.3f} m exceeds the "
                f"usable range {limit:.3f} m"
            )

    A = cfg.num_antennas
    T = cfg.chirps_per_rotation
    N = cfg.samples_per_chirp
    times = cfg.chirp_times()
    arm_angle = cfg.angular_speed_rad_s * times
    ax, ay = antenna_positions_xy(cfg, times, trajectory)
    heights = np.asarray(cfg.antenna_heights_m)

    n_idx = np.arange(N)
    range_gamma = TWO_PI / (N * cfg.range_bin_m)  # phase per metre per sample index
    cube = np.zeros((A, T, N), dtype=np.complex128)

    for refl in reflectors:
        px, py, pz = refl.position()
        amp = refl.amplitude * pattern.gain(arm_angle - refl.azimuth_rad)
        dxy2 = (px - ax) ** 2 + (py - ay) ** 2
        dz = pz - heights
        dist = np.sqrt(dxy2[None, :] + (dz**2)[:, None])  # (A, T)
        phase = (
            range_gamma * dist[:, :, None] * n_idx[None, None, :]
            + (2.0 * TWO_PI / cfg.wavelength_m) * dist[:, :, None]
        )
        cube += amp[None, :, None] * np.exp(1j * phase)

    if noise_std > 0:
        scale = noise_std / math.sqrt(2.0)
        streams = np.random.SeedSequence(seed).spawn(T)
        for ti, stream in enumerate(streams):
            z = np.random.default_rng(stream).standard_normal((A, N, 2))
            cube[:, ti, :] += scale * (z[..., 0] + 1j * z[..., 1])

    return RawCube(samples=cube, cfg=cfg, seed=seed)


# -- cube files ------------------------------------------------------------


def save_cube(cube: RawCube, path: str | Path) -> None:
    """Write a cube: 64-byte header then float32 re/im pairs in (a, t, n) order."""
    cfg = cube.cfg
    header = _CUBE_HEADER.pack(
        _CUBE_MAGIC,
        _CUBE_VERSION,
        cfg.num_antennas,
        cfg.chirps_per_rotation,
        cfg.samples_per_chirp,
        cfg.rotation_radius_m,
        cfg.angular_speed_rad_s,
        cfg.wavelength_m,
        cfg.bandwidth_hz,
        cube.seed,
    )
    payload = np.empty(cube.samples.shape + (2,), dtype=np.float32)
    payload[..., 0] = cube.samples.real
    payload[..., 1] = cube.samples.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def load_cube(path: str | Path, cfg: RadarConfig | None = None) -> RawCube:
    """Read a cube file.

    If cfg is given it must agree with the header; otherwise a config is
    reconstructed from the header with default antenna spacing, maximum
    range and field of view.
    """
    with open(path, "rb") as fh:
        raw_header = fh.read(_CUBE_HEADER.size)
        if len(raw_header) != _CUBE_HEADER.size:
            raise FormatError(f"{path}: truncated cube header")
        magic, version, A, T, N, radius, omega, wavelength, bandwidth, seed = (
            _CUBE_HEADER.unpack(raw_header)
        )
        if magic != _CUBE_MAGIC:
            raise FormatError(f"{path}: not a cube file (bad magic {magic!r})")
        if version != _CUBE_VERSION:
            raise FormatError(f"{path}: unsupported cube version {version}")
        payload = np.frombuffer(fh.read(), dtype=np.float32)

    if payload.size != A * T * N * 2:
        raise FormatError(
            f"{path}: payload holds {payload.size} floats, expected {A * T * N * 2}"
        )
    if cfg is None:
        from .config import _default_heights

        cfg = RadarConfig(
            rotation_radius_m=radius,
            angular_speed_rad_s=omega,
            wavelength_m=wavelength,
            bandwidth_hz=bandwidth,
            samples_per_chirp=N,
            chirps_per_rotation=T,
            antenna_heights_m=_default_heights(wavelength, A),
        )
    else:
        matches = (
            cfg.num_antennas == A
            and cfg.chirps_per_rotation == T
            and cfg.samples_per_chirp == N
            and math.isclose(cfg.rotation_radius_m, radius, rel_tol=1e-9)
            and math.isclose(cfg.angular_speed_rad_s, omega, rel_tol=1e-9)
            and math.isclose(cfg.wavelength_m, wavelength, rel_tol=1e-9)
            and math.isclose(cfg.bandwidth_hz, bandwidth, rel_tol=1e-9)
        )
        if not matches:
            raise FormatError(f"{path}: header disagrees with the supplied config")

    shaped = payload.reshape(A, T, N, 2).astype(np.float64)
    samples = shaped[..., 0] + 1j * shaped[..., 1]
    return RawCube(samples=samples, cfg=cfg, seed=seed)
