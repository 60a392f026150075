"""Scene simulator: geometry, phase model, patterns, cube files."""

import math

import numpy as np
import pytest

from spinsar.config import TWO_PI, RadarConfig
from spinsar.errors import FormatError, InvalidConfig, SceneError
from spinsar.scene import (
    RadiationPattern,
    Reflector,
    Trajectory,
    approx_distance,
    exact_distance,
    load_cube,
    save_cube,
    simulate,
)


def test_reflector_validation():
    r = Reflector(range_m=2.0, azimuth_rad=1.0, elevation_rad=0.1, amplitude=0.5)
    assert r.position()[2] == pytest.approx(2.0 * math.sin(0.1))
    with pytest.raises(SceneError):
        Reflector(range_m=-1.0, azimuth_rad=0.0)
    with pytest.raises(SceneError):
        Reflector(range_m=2.0, azimuth_rad=7.0)
    with pytest.raises(SceneError):
        Reflector(range_m=2.0, azimuth_rad=1.0, amplitude=-0.5)


def test_trajectory_validation():
    t = Trajectory(speed_m_s=0.4, heading_rad=1.0)
    assert t.speed_m_s == 0.4
    with pytest.raises(SceneError):
        Trajectory(speed_m_s=-0.1, heading_rad=0.0)


def test_pattern_gain_basics():
    p = RadiationPattern()
    assert p.gain(0.0) == 1.0
    assert p.gain(math.pi / 4 + 0.01) == 0.0
    assert p.gain(math.pi) == 0.0
    # default exponent gives a 30 degree two-sided 3 dB power width
    assert p.gain(math.radians(15.0)) ** 2 == pytest.approx(0.5, abs=1e-6)


def test_pattern_from_half_power_width():
    p = RadiationPattern.from_half_power_width(math.radians(40.0))
    assert p.gain(math.radians(20.0)) ** 2 == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(InvalidConfig):
        RadiationPattern.from_half_power_width(0.0)
    with pytest.raises(InvalidConfig):
        RadiationPattern(kind="cardioid")


def test_omni_pattern_flat_inside_cutoff():
    p = RadiationPattern(kind="omni", cutoff_rad=math.pi)
    offs = np.linspace(-3.0, 3.0, 25)
    assert np.all(p.gain(offs) == 1.0)


def test_distance_models(cfg1):
    refl = Reflector(range_m=3.0, azimuth_rad=1.0)
    # arm pointing straight at the reflector: antenna is r closer
    t_face = 1.0 / cfg1.angular_speed_rad_s
    ant = np.array([0.08 * math.cos(1.0), 0.08 * math.sin(1.0), 0.0])
    assert exact_distance(refl, ant) == pytest.approx(3.0 - 0.08)
    assert approx_distance(refl, cfg1, Trajectory(), t_face) == pytest.approx(3.0 - 0.08)
    # quarter turn later the cosine term vanishes
    t_side = (1.0 + math.pi / 2) / cfg1.angular_speed_rad_s
    assert approx_distance(refl, cfg1, Trajectory(), t_side) == pytest.approx(3.0)


def test_approx_distance_error_shrinks_with_range(cfg1):
    # the neglected quadratic term scales as 1/R
    traj = Trajectory(speed_m_s=0.5, heading_rad=2.0)
    t = 0.4

    def err(R):
        refl = Reflector(range_m=R, azimuth_rad=1.0)
        ang = cfg1.angular_speed_rad_s * t
        ant = np.array(
            [
                0.08 * math.cos(ang) + 0.5 * t * math.cos(2.0),
                0.08 * math.sin(ang) + 0.5 * t * math.sin(2.0),
                0.0,
            ]
        )
        return abs(approx_distance(refl, cfg1, traj, t) - exact_distance(refl, ant))

    e2, e8 = err(2.0), err(8.0)
    assert e8 < e2 / 3.0


def test_empty_scene_zero_cube(cfg1):
    cube = simulate([], cfg1)
    assert cube.samples.shape == (1, 1200, 256)
    assert not np.any(cube.samples)


def test_boresight_chirp_range_bin(static_cube, cfg1):
    # chirp whose arm points at the 40 degree reflector; the antenna sits
    # r = 8 cm closer than the platform centre, so the beat bin tracks
    # R - r rather than R
    chirp = round(math.radians(40.0) / cfg1.angular_speed_rad_s * cfg1.prf_hz)
    spectrum = np.abs(np.fft.fft(static_cube.samples[0, chirp]))
    half = cfg1.samples_per_chirp // 2
    assert spectrum[:half].argmax() == round((3.0 - 0.08) / cfg1.range_bin_m) == 78


def test_phase_slope_matches_beat_frequency(cfg1):
    cube = simulate([Reflector(range_m=4.0, azimuth_rad=1.0)], cfg1)
    t_idx = 191
    phase = np.unwrap(np.angle(cube.samples[0, t_idx]))
    slope = np.diff(phase).mean()
    ang = cfg1.angular_speed_rad_s * t_idx / cfg1.prf_hz
    ant = np.array([0.08 * math.cos(ang), 0.08 * math.sin(ang), 0.0])
    d = exact_distance(Reflector(range_m=4.0, azimuth_rad=1.0), ant)
    want = TWO_PI * d / (cfg1.samples_per_chirp * cfg1.range_bin_m)
    assert abs(slope - want) / want < 1e-6


def test_simulate_linearity(cfg1):
    a = [Reflector(range_m=2.0, azimuth_rad=0.5)]
    b = [Reflector(range_m=5.0, azimuth_rad=4.0, amplitude=0.7)]
    both = simulate(a + b, cfg1)
    parts = simulate(a, cfg1).samples + simulate(b, cfg1).samples
    scale = np.abs(both.samples).max()
    assert np.abs(both.samples - parts).max() <= 1e-10 * scale


def test_simulate_deterministic(cfg1):
    refs = [Reflector(range_m=3.0, azimuth_rad=2.0)]
    c1 = simulate(refs, cfg1, noise_std=0.5, seed=77)
    c2 = simulate(refs, cfg1, noise_std=0.5, seed=77)
    assert np.array_equal(c1.samples, c2.samples)
    c3 = simulate(refs, cfg1, noise_std=0.5, seed=78)
    assert not np.array_equal(c1.samples, c3.samples)


def test_amplitude_scales_cube(cfg1):
    base = simulate([Reflector(range_m=3.0, azimuth_rad=1.0)], cfg1)
    triple = simulate([Reflector(range_m=3.0, azimuth_rad=1.0, amplitude=3.0)], cfg1)
    assert np.allclose(triple.samples, 3.0 * base.samples, rtol=1e-12)


def test_reflector_beyond_range_rejected(cfg1):
    with pytest.raises(SceneError):
        simulate([Reflector(range_m=9.8, azimuth_rad=0.0)], cfg1)
    with pytest.raises(SceneError):
        simulate([], cfg1, noise_std=-0.1)


def test_cube_round_trip(tmp_path, static_cube):
    path = tmp_path / "cube.bin"
    save_cube(static_cube, path)
    back = load_cube(path)
    assert back.cfg == static_cube.cfg
    assert back.seed == static_cube.seed
    # samples persist as f32 pairs
    assert np.allclose(back.samples, static_cube.samples, atol=1e-4)


def test_load_cube_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not a cube")
    with pytest.raises(FormatError):
        load_cube(path)


def test_load_cube_rejects_truncation(tmp_path, static_cube):
    path = tmp_path / "cube.bin"
    save_cube(static_cube, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(FormatError):
        load_cube(path)
