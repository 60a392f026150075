"""Shared fixtures: configs and small simulated cubes reused across files."""

import math
from pathlib import Path

import numpy as np
import pytest

from spinsar.config import RadarConfig
from spinsar.imaging import ImagingGrid
from spinsar.scene import Reflector, simulate

REPO_ROOT = Path(__file__).resolve().parents[1]
SCENARIO_DIR = REPO_ROOT / "scenarios"


@pytest.fixture(scope="session")
def cfg():
    return RadarConfig()


@pytest.fixture(scope="session")
def cfg1():
    """Single-antenna config; planar tests don't need the vertical array."""
    return RadarConfig(antenna_heights_m=(0.0,))


@pytest.fixture(scope="session")
def static_ref():
    return Reflector(range_m=3.0, azimuth_rad=math.radians(40.0))


@pytest.fixture(scope="session")
def static_cube(cfg1, static_ref):
    """Noiseless single static reflector at 3.0 m, 40 degrees."""
    return simulate([static_ref], cfg1)


@pytest.fixture(scope="session")
def planar_grid():
    """Full-circle azimuth grid with a single elevation bin at 0."""
    return ImagingGrid(
        azimuth_bins=512,
        elevation_bins=1,
        elevation_start_rad=0.0,
        elevation_span_rad=0.0,
        range_bins=256,
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)
