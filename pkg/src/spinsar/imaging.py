"""Coherent 3D beamforming over the rotating cylindrical aperture.

For a look direction d and chirp window centered on its azimuth, the
beamformer sums S^a_t * exp(j 4 pi d.(p^a_t + v t) / lambda) over antennas
and chirps, then takes a windowed range FFT per direction. The direct form
(beamform_compensated) evaluates the double sum; the fast form
(beamform_fast) first combines antennas per elevation and then runs a
single planar stage, which is algebraically identical because the phase
splits into cos(el) * planar + sin(el) * height terms.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .config import RadarConfig, TWO_PI
from .errors import FormatError, InvalidConfig
from .scene import RawCube, Trajectory

_HEAT_MAGIC = b"RRHEAT\0\0"
_HEAT_VERSION = 1
# magic, version, az/el/range bins, extents (4), range step, range offset
_HEAT_HEADER = struct.Struct("<8s4I6d")


@dataclass(frozen=True)
class ImagingGrid:
    """Direction/range sampling of the output heatmap.

    Azimuth bins are periodic samples start + i * span / bins (the end
    point is excluded, so a full-circle grid has no duplicate column).
    Elevation bins sample the closed interval [start, start + span]; a
    single-bin axis sits at the interval midpoint.
    """

    azimuth_bins: int = 512
    elevation_bins: int = 64
    range_bins: int = 256
    azimuth_start_rad: float = 0.0
    azimuth_span_rad: float = TWO_PI
    elevation_start_rad: float = -math.pi / 4.0
    elevation_span_rad: float = math.pi / 2.0

    def __post_init__(self):
        for name in ("azimuth_bins", "elevation_bins", "range_bins"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise InvalidConfig(f"{name} must be an integer >= 1, got {value!r}")
        if not (0.0 <= self.azimuth_start_rad < TWO_PI):
            raise InvalidConfig(
                f"azimuth_start_rad must lie in [0, 2*pi), got {self.azimuth_start_rad!r}"
            )
        if not (0.0 < self.azimuth_span_rad <= TWO_PI):
            raise InvalidConfig(
                f"azimuth_span_rad must lie in (0, 2*pi], got {self.azimuth_span_rad!r}"
            )
        if self.elevation_span_rad < 0.0:
            raise InvalidConfig("elevation_span_rad must be >= 0")
        if self.elevation_bins > 1 and self.elevation_span_rad == 0.0:
            raise InvalidConfig("elevation_span_rad must be > 0 for more than one bin")
        lo = self.elevation_start_rad
        hi = self.elevation_start_rad + self.elevation_span_rad
        if lo < -math.pi / 2 or hi > math.pi / 2:
            raise InvalidConfig(
                f"elevation extent [{lo!r}, {hi!r}] exceeds [-pi/2, pi/2]"
            )

    def azimuths(self) -> np.ndarray:
        step = self.azimuth_span_rad / self.azimuth_bins
        return (self.azimuth_start_rad + np.arange(self.azimuth_bins) * step) % TWO_PI

    def elevations(self) -> np.ndarray:
        if self.elevation_bins == 1:
            return np.array([self.elevation_start_rad + self.elevation_span_rad / 2.0])
        return np.linspace(
            self.elevation_start_rad,
            self.elevation_start_rad + self.elevation_span_rad,
            self.elevation_bins,
        )

    @property
    def azimuth_step_rad(self) -> float:
        return self.azimuth_span_rad / self.azimuth_bins


@dataclass
class Heatmap3D:
    """Beamformed magnitudes, shape (azimuth, elevation, range).

    range_offset_m calibrates the range axis: the FMCW beat frequency
    encodes antenna-to-target distance, so with carrier-phase-only
    beamforming weights a target at grid range R peaks near bin
    (R - r <cos d>) / dr, where <cos d> averages the boresight offset over
    the summation window. The beamformer stores r * sin(fov/2) / (fov/2)
    here so bin k maps back to k * dr + offset (residual under 0.2 bins
    for typical patterns).
    """

    magnitudes: np.ndarray
    grid: ImagingGrid
    range_step_m: float
    range_offset_m: float = 0.0
    cfg: RadarConfig | None = None
    complex_beams: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        expected = (self.grid.azimuth_bins, self.grid.elevation_bins, self.grid.range_bins)
        if self.magnitudes.shape != expected:
            raise InvalidConfig(
                f"heatmap shape {self.magnitudes.shape} does not match grid {expected}"
            )

    def ranges(self) -> np.ndarray:
        """Calibrated range (m) of each range bin."""
        return np.arange(self.grid.range_bins) * self.range_step_m + self.range_offset_m


def _fast_time_window(n: int, kind: str) -> np.ndarray:
    if kind == "hann":
        return np.hanning(n)
    if kind == "rect":
        return np.ones(n)
    raise InvalidConfig(f"unknown window {kind!r} (expected 'hann' or 'rect')")


def range_profile(beam: np.ndarray, range_bins: int | None = None, window: str = "hann"):
    """Windowed range-FFT magnitude of one beamformed chirp; bin k <-> k * dr."""
    beam = np.asarray(beam)
    n = beam.shape[-1]
    if range_bins is None:
        range_bins = n
    if range_bins > n:
        raise InvalidConfig(f"range_bins {range_bins} exceeds sample count {n}")
    spectrum = np.fft.fft(beam * _fast_time_window(n, window), axis=-1)
    return np.abs(spectrum[..., :range_bins])


def window_bounds(
    azimuths: np.ndarray, n_chirps: int, fov_window_rad: float
) -> tuple[np.ndarray, np.ndarray]:
    """Circular chirp-index windows per azimuth.

    Chirp k has boresight azimuth 2 pi k / T; the window keeps chirps whose
    boresight is within fov/2 of the look azimuth (inclusive edges).
    """
    step = TWO_PI / n_chirps
    lo = (azimuths - fov_window_rad / 2.0) / step
    hi = (azimuths + fov_window_rad / 2.0) / step
    start = np.ceil(lo - 1e-9).astype(np.int64)
    length = (np.floor(hi + 1e-9).astype(np.int64) - start + 1).clip(0, n_chirps)
    return start % n_chirps, length


def _resolve_motion(motion) -> tuple[float, float]:
    if motion is None:
        return 0.0, 0.0
    if isinstance(motion, Trajectory):
        speed, heading = motion.speed_m_s, motion.heading_rad
    elif hasattr(motion, "speed_m_s") and hasattr(motion, "heading_rad"):
        speed, heading = float(motion.speed_m_s), float(motion.heading_rad)
    else:
        try:
            speed, heading = (float(motion[0]), float(motion[1]))
        except (TypeError, ValueError, IndexError) as exc:
            raise InvalidConfig(f"cannot interpret motion {motion!r}") from exc
    if not (0.0 <= speed < 2.0):
        raise InvalidConfig(f"motion speed {speed!r} outside the sane range [0, 2) m/s")
    return speed, heading


def _beamform(
    cube: RawCube,
    grid: ImagingGrid,
    motion,
    factored: bool,
    threads: int = 1,
    window: str = "hann",
    keep_complex: bool = False,
) -> Heatmap3D:
    cfg = cube.cfg
    if grid.range_bins > cfg.samples_per_chirp:
        raise InvalidConfig(
            f"grid wants {grid.range_bins} range bins but chirps carry "
            f"{cfg.samples_per_chirp} samples"
        )
    speed, heading = _resolve_motion(motion)
    azimuths = grid.azimuths()
    elevations = grid.elevations()
    times = cfg.chirp_times()
    win_start, win_len = window_bounds(azimuths, cfg.chirps_per_rotation, cfg.fov_window_rad)

    # Planar part of d.(p + v t): shared by every elevation, scaled by cos(el).
    planar = cfg.rotation_radius_m * np.cos(
        cfg.angular_speed_rad_s * times[None, :] - azimuths[:, None]
    )
    if speed > 0:
        planar = planar + speed * times[None, :] * np.cos(heading - azimuths[:, None])
    phase_scale = 2.0 * TWO_PI / cfg.wavelength_m  # 4 pi / lambda
    heights = np.asarray(cfg.antenna_heights_m)
    taper = _fast_time_window(cfg.samples_per_chirp, window)

    mags = np.empty((grid.azimuth_bins, grid.elevation_bins, grid.range_bins))
    kept = (
        np.empty((grid.azimuth_bins, grid.elevation_bins, grid.range_bins), dtype=complex)
        if keep_complex
        else None
    )
    samples = np.ascontiguousarray(cube.samples)
    for j, elev in enumerate(elevations):
        phase = (phase_scale * math.cos(elev)) * planar
        elev_phase = (phase_scale * math.sin(elev)) * heights
        if factored:
            sprime = np.tensordot(np.exp(1j * elev_phase), samples, axes=(0, 0))
            beams = kernels.azimuth_sum(
                np.ascontiguousarray(sprime), phase, win_start, win_len, threads
            )
        else:
            beams = kernels.direct_sum(
                samples, phase, elev_phase, win_start, win_len, threads
            )
        spectrum = np.fft.fft(beams * taper[None, :], axis=1)[:, : grid.range_bins]
        mags[:, j, :] = np.abs(spectrum)
        if kept is not None:
            kept[:, j, :] = spectrum

    half_fov = cfg.fov_window_rad / 2.0
    return Heatmap3D(
        magnitudes=mags,
        grid=grid,
        range_step_m=cfg.range_bin_m,
        range_offset_m=cfg.rotation_radius_m * math.sin(half_fov) / half_fov,
        cfg=cfg,
        complex_beams=kept,
    )


def beamform_static(cube: RawCube, grid: ImagingGrid, **kwargs) -> Heatmap3D:
    """Beamform assuming a stationary platform (direct double sum)."""
    return _beamform(cube, grid, None, factored=False, **kwargs)


def beamform_compensated(cube: RawCube, grid: ImagingGrid, motion, **kwargs) -> Heatmap3D:
    """Direct double sum with antenna positions displaced by v t."""
    return _beamform(cube, grid, motion, factored=False, **kwargs)


def beamform_fast(cube: RawCube, grid: ImagingGrid, motion, **kwargs) -> Heatmap3D:
    """Factored form: per-elevation antenna combine, then one planar stage."""
    return _beamform(cube, grid, motion, factored=True, **kwargs)


def peak_range_image(heat: Heatmap3D) -> np.ndarray:
    """Calibrated range (m) of the strongest bin per direction, shape (az, el)."""
    return heat.ranges()[heat.magnitudes.argmax(axis=2)]


# -- heatmap files ---------------------------------------------------------


def save_heatmap(heat: Heatmap3D, path: str | Path) -> None:
    """Write a heatmap: 64-byte header then float32 magnitudes, C order."""
    grid = heat.grid
    header = _HEAT_HEADER.pack(
        _HEAT_MAGIC,
        _HEAT_VERSION,
        grid.azimuth_bins,
        grid.elevation_bins,
        grid.range_bins,
        grid.azimuth_start_rad,
        grid.azimuth_span_rad,
        grid.elevation_start_rad,
        grid.elevation_span_rad,
        heat.range_step_m,
        heat.range_offset_m,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(heat.magnitudes.astype(np.float32).tobytes())


def load_heatmap(path: str | Path) -> Heatmap3D:
    with open(path, "rb") as fh:
        raw = fh.read(_HEAT_HEADER.size)
        if len(raw) != _HEAT_HEADER.size:
            raise FormatError(f"{path}: truncated heatmap header")
        magic, version, az, el, rng, az0, azs, el0, els, step, offset = _HEAT_HEADER.unpack(raw)
        if magic != _HEAT_MAGIC:
            raise FormatError(f"{path}: not a heatmap file (bad magic {magic!r})")
        if version != _HEAT_VERSION:
            raise FormatError(f"{path}: unsupported heatmap version {version}")
        payload = np.frombuffer(fh.read(), dtype=np.float32)
    if payload.size != az * el * rng:
        raise FormatError(
            f"{path}: payload holds {payload.size} floats, expected {az * el * rng}"
        )
    grid = ImagingGrid(
        azimuth_bins=az,
        elevation_bins=el,
        range_bins=rng,
        azimuth_start_rad=az0,
        azimuth_span_rad=azs,
        elevation_start_rad=el0,
        elevation_span_rad=els,
    )
    mags = payload.reshape(az, el, rng).astype(np.float64)
    return Heatmap3D(magnitudes=mags, grid=grid, range_step_m=step, range_offset_m=offset)
