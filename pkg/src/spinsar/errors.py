"""Exception hierarchy shared across the package.

InvalidConfig / SceneError / FormatError mark bad user input (CLI exit 3);
EstimationError / NumericalError mark runtime numerical failures (exit 4).
"""


class SpinsarError(Exception):
    """Base class for all package errors."""


class InvalidConfig(SpinsarError, ValueError):
    """A configuration value violates its documented constraints."""


class SceneError(SpinsarError, ValueError):
    """A scene, trajectory, or scenario description is unusable."""


class FormatError(SpinsarError, ValueError):
    """A file on disk does not match the expected on-disk format."""


class EstimationError(SpinsarError, RuntimeError):
    """An estimator could not produce a usable result."""


class NumericalError(SpinsarError, RuntimeError):
    """A numerical routine failed to converge or hit a degenerate case."""
