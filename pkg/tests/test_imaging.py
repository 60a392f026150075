"""3D beamforming: grids, windows, compensation, heatmap files."""

import math

import numpy as np
import pytest

from spinsar.config import TWO_PI, RadarConfig
from spinsar.errors import FormatError, InvalidConfig
from spinsar.imaging import (
    Heatmap3D,
    ImagingGrid,
    beamform_compensated,
    beamform_fast,
    beamform_static,
    load_heatmap,
    peak_range_image,
    range_profile,
    save_heatmap,
    window_bounds,
)
from spinsar.pointcloud import load_range_image_pgm, save_range_image_pgm
from spinsar.scene import RadiationPattern, Reflector, Trajectory, simulate


def test_grid_axes():
    grid = ImagingGrid(azimuth_bins=8, elevation_bins=3, range_bins=16,
                       elevation_start_rad=-0.2, elevation_span_rad=0.4)
    az = grid.azimuths()
    assert len(az) == 8
    # full circle sampled without a duplicate endpoint column
    assert az[0] == 0.0 and az[-1] == pytest.approx(2 * math.pi * 7 / 8)
    el = grid.elevations()
    assert el[0] == -0.2 and el[-1] == pytest.approx(0.2)
    single = ImagingGrid(azimuth_bins=8, elevation_bins=1, range_bins=16,
                         elevation_start_rad=-0.2, elevation_span_rad=0.4)
    assert single.elevations()[0] == pytest.approx(0.0)


def test_grid_validation():
    with pytest.raises(InvalidConfig):
        ImagingGrid(azimuth_bins=0)
    with pytest.raises(InvalidConfig):
        ImagingGrid(azimuth_span_rad=0.0)
    with pytest.raises(InvalidConfig):
        ImagingGrid(elevation_bins=4, elevation_span_rad=0.0)
    with pytest.raises(InvalidConfig):
        ImagingGrid(elevation_start_rad=-2.0, elevation_span_rad=0.1)


def test_window_bounds_fov90():
    # bin-centred azimuth: 90 degrees is chirp 300 of 1200, window spans
    # +-150 chirps inclusive
    start, length = window_bounds(np.array([math.pi / 2]), 1200, math.pi / 2)
    assert length[0] == 301
    assert start[0] == 150
    # near zero azimuth the window wraps through the rotation boundary
    start, length = window_bounds(np.array([0.0]), 1200, math.pi / 2)
    assert start[0] == (1200 - 150) % 1200
    assert length[0] == 301


def test_range_profile_tone():
    N = 256
    n = np.arange(N)
    beam = np.exp(1j * TWO_PI * 100 * n / N)
    prof = range_profile(beam, window="rect")
    assert prof.argmax() == 100
    assert range_profile(np.zeros(N, dtype=complex)).max() == 0.0


def test_range_profile_two_tones_window_widening():
    N = 256
    n = np.arange(N)
    beam = np.exp(1j * TWO_PI * 80 * n / N) + np.exp(1j * TWO_PI * 81 * n / N)
    rect = range_profile(beam, window="rect")
    # integer-bin tones leak nowhere under the rectangular window
    assert rect[80] == pytest.approx(256.0)
    assert rect[81] == pytest.approx(256.0)
    assert rect[79] < 1e-9 * rect[80]
    # the Hann mainlobe spreads the pair over its shoulders
    hann = range_profile(beam, window="hann")
    assert hann[79] > 0.9 * hann[80]
    assert hann[82] > 0.9 * hann[81]


def test_static_localization(static_cube, planar_grid, cfg1):
    heat = beamform_static(static_cube, planar_grid)
    iaz, _, irng = np.unravel_index(heat.magnitudes.argmax(), heat.magnitudes.shape)
    az_err = heat.grid.azimuths()[iaz] - math.radians(40.0)
    assert abs(az_err) <= planar_grid.azimuth_step_rad
    assert abs(heat.ranges()[irng] - 3.0) <= cfg1.range_bin_m


def test_range_axis_calibration(static_cube, planar_grid, cfg1):
    heat = beamform_static(static_cube, planar_grid)
    # beat frequencies track antenna distances, about r short of platform
    # range at boresight; ranges() folds the calibration offset back in
    half = cfg1.fov_window_rad / 2
    assert heat.range_offset_m == pytest.approx(0.08 * math.sin(half) / half)
    assert heat.ranges()[0] == pytest.approx(heat.range_offset_m)


def test_two_reflectors_2deg_resolved():
    """Two reflectors 2 degrees apart separate on an omni full-circle image."""
    cfg = RadarConfig(antenna_heights_m=(0.0,), fov_window_rad=TWO_PI)
    omni = RadiationPattern(kind="omni", cutoff_rad=math.pi)
    refs = [Reflector(range_m=3.0, azimuth_rad=math.radians(89.0)),
            Reflector(range_m=3.0, azimuth_rad=math.radians(91.0))]
    grid = ImagingGrid(azimuth_bins=257, elevation_bins=1, elevation_start_rad=0.0,
                       elevation_span_rad=0.0, range_bins=256,
                       azimuth_start_rad=math.radians(86.0),
                       azimuth_span_rad=math.radians(8.0))
    heat = beamform_static(simulate(refs, cfg, pattern=omni), grid)
    irng = int(np.unravel_index(heat.magnitudes.argmax(), heat.magnitudes.shape)[2])
    prof = heat.magnitudes[:, 0, irng] ** 2
    peaks = [i for i in range(1, len(prof) - 1)
             if prof[i] > prof[i - 1] and prof[i] >= prof[i + 1]]
    peaks.sort(key=lambda i: -prof[i])
    assert len(peaks) >= 2
    p1, p2 = sorted(peaks[:2])
    azs = np.degrees(heat.grid.azimuths()[[p1, p2]])
    assert azs[0] == pytest.approx(89.0, abs=0.3)
    assert azs[1] == pytest.approx(91.0, abs=0.3)
    assert prof[p1:p2 + 1].min() <= 0.5 * min(prof[p1], prof[p2])


def test_compensated_v0_equals_static(static_cube, planar_grid):
    static = beamform_static(static_cube, planar_grid)
    comp = beamform_compensated(static_cube, planar_grid, (0.0, 1.234))
    assert np.array_equal(comp.magnitudes, static.magnitudes)


def test_fast_matches_direct(cfg1, planar_grid):
    traj = Trajectory(speed_m_s=0.3, heading_rad=1.0)
    cube = simulate([Reflector(range_m=3.0, azimuth_rad=1.0)], cfg1,
                    trajectory=traj, noise_std=0.1, seed=3)
    fast = beamform_fast(cube, planar_grid, traj)
    direct = beamform_compensated(cube, planar_grid, traj)
    dev = np.abs(fast.magnitudes - direct.magnitudes).max()
    assert dev <= 1e-6 * direct.magnitudes.max()


def test_true_motion_focuses_moving_scene(cfg1, planar_grid):
    """Supplying the true motion recovers the reflector; forcing zero
    motion leaves the azimuth displaced by several bins."""
    theta0, R = math.radians(50.0), 3.0
    traj = Trajectory(speed_m_s=0.4, heading_rad=math.radians(105.0))
    cube = simulate([Reflector(range_m=R, azimuth_rad=theta0)], cfg1, trajectory=traj)

    comp = beamform_fast(cube, planar_grid, traj)
    iaz, _, irng = np.unravel_index(comp.magnitudes.argmax(), comp.magnitudes.shape)
    assert abs(comp.grid.azimuths()[iaz] - theta0) <= planar_grid.azimuth_step_rad
    assert abs(comp.ranges()[irng] - R) <= cfg1.range_bin_m

    unc = beamform_fast(cube, planar_grid, (0.0, 0.0))
    iaz_u = int(np.unravel_index(unc.magnitudes.argmax(), unc.magnitudes.shape)[0])
    off = abs(unc.grid.azimuths()[iaz_u] - theta0)
    assert off >= 2 * planar_grid.azimuth_step_rad


def test_snr_grows_with_window(planar_grid):
    """Coherent gain tracks the chirp count W while noise grows as sqrt(W).

    Small windows only: wider ones decohere through uncompensated beat
    migration across the window.
    """
    grid = ImagingGrid(azimuth_bins=128, elevation_bins=1, elevation_start_rad=0.0,
                       elevation_span_rad=0.0, range_bins=256)
    omni = RadiationPattern(kind="omni", cutoff_rad=math.pi)
    ref = Reflector(range_m=3.0, azimuth_rad=math.pi / 2)
    peaks, noises, Ws = [], [], []
    for fov_deg in (5.0, 10.0, 20.0, 30.0):
        cfg = RadarConfig(antenna_heights_m=(0.0,), fov_window_rad=math.radians(fov_deg))
        W = window_bounds(np.array([math.pi / 2]), 1200, cfg.fov_window_rad)[1][0]
        sig = beamform_static(simulate([ref], cfg, pattern=omni), grid)
        noise = beamform_static(simulate([], cfg, noise_std=1.0, seed=5), grid)
        Ws.append(W)
        peaks.append(sig.magnitudes.max())
        noises.append(math.sqrt(float((noise.magnitudes ** 2).mean())))
    per_w = np.array(peaks) / np.array(Ws)
    assert np.abs(per_w / per_w[0] - 1.0).max() < 0.05
    noise_ratio = noises[-1] / noises[0]
    assert noise_ratio == pytest.approx(math.sqrt(Ws[-1] / Ws[0]), rel=0.05)


def test_argmax_invariant_to_amplitude(cfg1, planar_grid):
    h1 = beamform_static(simulate([Reflector(range_m=3.0, azimuth_rad=1.0)], cfg1),
                         planar_grid)
    h3 = beamform_static(
        simulate([Reflector(range_m=3.0, azimuth_rad=1.0, amplitude=3.0)], cfg1),
        planar_grid)
    assert h1.magnitudes.argmax() == h3.magnitudes.argmax()
    assert h3.magnitudes.max() == pytest.approx(3.0 * h1.magnitudes.max())


def test_empty_scene_empty_heatmap(cfg1, planar_grid, static_cube):
    ref_peak = beamform_static(static_cube, planar_grid).magnitudes.max()
    empty = beamform_static(simulate([], cfg1), planar_grid)
    assert empty.magnitudes.max() < 1e-9 * ref_peak


def test_keep_complex_consistent(cfg1, static_cube):
    grid = ImagingGrid(azimuth_bins=32, elevation_bins=1, elevation_start_rad=0.0,
                       elevation_span_rad=0.0, range_bins=64)
    heat = beamform_static(static_cube, grid, keep_complex=True)
    assert heat.complex_beams is not None
    assert np.array_equal(np.abs(heat.complex_beams), heat.magnitudes)
    plain = beamform_static(static_cube, grid)
    assert plain.complex_beams is None


def test_grid_range_bins_capped_by_samples(cfg1, static_cube):
    grid = ImagingGrid(azimuth_bins=8, elevation_bins=1, elevation_start_rad=0.0,
                       elevation_span_rad=0.0, range_bins=512)
    with pytest.raises(InvalidConfig):
        beamform_static(static_cube, grid)


def test_bad_motion_rejected(static_cube, planar_grid):
    with pytest.raises(InvalidConfig):
        beamform_fast(static_cube, planar_grid, (5.0, 0.0))
    with pytest.raises(InvalidConfig):
        beamform_fast(static_cube, planar_grid, "northwest")


def test_heatmap_round_trip(tmp_path, static_cube, cfg1):
    grid = ImagingGrid(azimuth_bins=32, elevation_bins=2, elevation_start_rad=-0.1,
                       elevation_span_rad=0.2, range_bins=64)
    heat = beamform_static(static_cube, grid)
    path = tmp_path / "heat.bin"
    save_heatmap(heat, path)
    back = load_heatmap(path)
    assert back.grid == heat.grid
    assert back.range_step_m == pytest.approx(heat.range_step_m)
    assert back.range_offset_m == pytest.approx(heat.range_offset_m)
    assert np.allclose(back.magnitudes, heat.magnitudes, rtol=1e-6)


def test_heatmap_rejects_cube_file(tmp_path, static_cube):
    from spinsar.scene import save_cube

    path = tmp_path / "cube.bin"
    save_cube(static_cube, path)
    with pytest.raises(FormatError):
        load_heatmap(path)


def test_peak_range_image_and_pgm(tmp_path, static_cube, cfg1):
    grid = ImagingGrid(azimuth_bins=64, elevation_bins=1, elevation_start_rad=0.0,
                       elevation_span_rad=0.0, range_bins=256)
    heat = beamform_static(static_cube, grid)
    img = peak_range_image(heat)
    assert img.shape == (64, 1)
    iaz = int(np.argmin(np.abs(heat.grid.azimuths() - math.radians(40.0))))
    assert img[iaz, 0] == pytest.approx(3.0, abs=2 * cfg1.range_bin_m)
    path = tmp_path / "peaks.pgm"
    save_range_image_pgm(img, path)
    back = load_range_image_pgm(path)
    # PGM stores millimetres
    assert np.abs(back - img).max() <= 5e-4 + 1e-9
