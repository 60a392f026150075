"""spinsar: imaging pipeline for a mechanically rotating mmWave radar.

A vertical array of antennas spins on a small-radius arm; coherent
integration over the swept cylindrical aperture yields 3D heatmaps,
Doppler spectrograms of the rotation give ego-motion, and CFAR turns
heatmaps into point clouds.
"""

__version__ = "0.1.0"

from .config import Direction, RadarConfig, ResolutionReport
from .scene import RadiationPattern, RawCube, Reflector, Trajectory

__all__ = [
    "Direction",
    "RadarConfig",
    "ResolutionReport",
    "RadiationPattern",
    "RawCube",
    "Reflector",
    "Trajectory",
    "__version__",
]
