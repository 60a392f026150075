"""Beam-shape analysis: Bessel J0, aperture quadrature, resolution."""

import math

import numpy as np
import pytest
from scipy.special import j0 as scipy_j0
from scipy.special import jn_zeros

from spinsar.config import RadarConfig
from spinsar.errors import InvalidConfig, NumericalError
from spinsar.beamshape import (
    BeamCurve,
    analytic_curve,
    beam_shape_analytic,
    beam_shape_numeric,
    beamwidth_3db,
    bessel_j0,
    measure_resolution_two_point,
)

R, LAM = 0.08, 0.0038


def test_bessel_j0_against_scipy():
    # dense grid straddling the series/asymptotic crossover plus far tail
    xs = np.concatenate([np.linspace(0.0, 30.0, 7501),
                         np.linspace(11.9, 12.1, 501),
                         [1e2, 1e3, 1e4]])
    ours = np.array([bessel_j0(x) for x in xs])
    assert np.abs(ours - scipy_j0(xs)).max() < 1e-10


def test_bessel_j0_symmetry_and_origin():
    assert bessel_j0(0.0) == 1.0
    for x in (0.7, 3.3, 14.2):
        assert bessel_j0(-x) == bessel_j0(x)


def test_bessel_j0_first_zero():
    from scipy.optimize import brentq

    z = brentq(bessel_j0, 2.0, 3.0)
    assert abs(z - jn_zeros(0, 1)[0]) < 1e-8


def test_analytic_peak_and_width():
    assert beam_shape_analytic(0.0, R, LAM) == pytest.approx(2 * math.pi)
    width = beamwidth_3db(analytic_curve(R, LAM))
    # the 0.36 lambda / r beamwidth constant, within 1%
    assert width * R / LAM == pytest.approx(0.36, rel=0.01)


def test_width_scales_with_lambda_over_r():
    w1 = beamwidth_3db(analytic_curve(R, LAM))
    w2 = beamwidth_3db(analytic_curve(2 * R, LAM))
    assert w1 / w2 == pytest.approx(2.0, rel=0.02)
    w3 = beamwidth_3db(analytic_curve(R, 2 * LAM))
    assert w3 / w1 == pytest.approx(2.0, rel=0.02)


def test_numeric_full_circle_matches_analytic():
    curve = beam_shape_numeric(R, LAM, fov_window_rad=2 * math.pi)
    mask = np.abs(curve.thetas) <= math.radians(5.0)
    power = beam_shape_analytic(curve.thetas[mask], R, LAM) ** 2
    power /= power.max()
    rms = math.sqrt(float(np.mean((curve.response[mask] - power) ** 2)))
    assert rms < 5e-3


def test_numeric_convergence_order():
    """Composite Simpson on the truncated window converges at order >= 2.

    The full-circle integrand is periodic and already exact at any node
    count, so the order is only measurable on a partial window.
    """
    thetas = np.linspace(-math.radians(3.0), math.radians(3.0), 301)
    ref = beam_shape_numeric(R, LAM, fov_window_rad=math.pi / 2, thetas=thetas,
                             nodes_per_2pi=8192)
    errs = []
    for nodes in (64, 128, 256):
        c = beam_shape_numeric(R, LAM, fov_window_rad=math.pi / 2, thetas=thetas,
                               nodes_per_2pi=nodes)
        errs.append(np.abs(c.response - ref.response).max())
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert min(orders) >= 2.0


def test_numeric_tiny_radius_flat():
    curve = beam_shape_numeric(1e-6, LAM, fov_window_rad=2 * math.pi,
                               thetas=np.linspace(-0.5, 0.5, 101))
    assert curve.response.max() - curve.response.min() < 1e-5


def test_numeric_fov_narrows_mainlobe():
    widths = []
    for fov in (30.0, 60.0, 90.0, 180.0):
        c = beam_shape_numeric(R, LAM, fov_window_rad=math.radians(fov))
        widths.append(beamwidth_3db(c))
    assert all(a > b for a, b in zip(widths, widths[1:]))


def test_numeric_rejects_bad_fov():
    with pytest.raises(InvalidConfig):
        beam_shape_numeric(R, LAM, fov_window_rad=0.0)
    with pytest.raises(InvalidConfig):
        beam_shape_numeric(R, LAM, fov_window_rad=7.0)


def test_beamwidth_triangle_exact():
    thetas = np.linspace(-1.0, 1.0, 2001)
    curve = BeamCurve(thetas=thetas, response=np.maximum(1.0 - np.abs(thetas), 0.0))
    assert beamwidth_3db(curve) == pytest.approx(1.0, rel=1e-9)


def test_beamwidth_needs_crossings():
    thetas = np.linspace(-1.0, 1.0, 101)
    with pytest.raises(NumericalError):
        beamwidth_3db(BeamCurve(thetas=thetas, response=np.ones_like(thetas)))
    with pytest.raises(NumericalError):
        beamwidth_3db(BeamCurve(thetas=thetas[:2], response=np.ones(2)))


def test_two_point_resolution_extremes(cfg1):
    assert measure_resolution_two_point(cfg1, math.radians(5.0))
    assert not measure_resolution_two_point(cfg1, math.radians(0.1))


def test_curve_csv_round_trip(tmp_path):
    curve = analytic_curve(R, LAM)
    path = tmp_path / "curve.csv"
    curve.save_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "theta_rad,power"
    assert len(lines) == len(curve.thetas) + 1
    theta0, p0 = (float(v) for v in lines[1].split(","))
    assert theta0 == pytest.approx(curve.thetas[0])
    assert p0 == pytest.approx(curve.response[0])
