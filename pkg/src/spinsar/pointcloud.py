"""CFAR point extraction and point-cloud evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import FormatError, InvalidConfig
from .imaging import Heatmap3D

_BRUTE_FORCE_LIMIT = 1000


@dataclass
class PointCloud:
    """Points in the robot frame at t=0, with detection intensities."""

    points: np.ndarray
    intensity: np.ndarray = field(default=None)  # type: ignore[assignment]
    frame: str = "robot-t0"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if self.intensity is None:
            self.intensity = np.ones(len(self.points))
        self.intensity = np.asarray(self.intensity, dtype=float).reshape(-1)
        if len(self.intensity) != len(self.points):
            raise InvalidConfig("intensity length does not match point count")
        if not np.all(np.isfinite(self.points)):
            raise InvalidConfig("point cloud contains non-finite coordinates")

    def __len__(self) -> int:
        return len(self.points)


def cfar_threshold_factor(pfa: float, train_total: int) -> float:
    """CA-CFAR scale alpha = T (pfa^(-1/T) - 1) for T training cells."""
    if not (0.0 < pfa < 1.0):
        raise InvalidConfig(f"pfa must lie in (0, 1), got {pfa!r}")
    return train_total * (pfa ** (-1.0 / train_total) - 1.0)


def cfar_extract(
    heat: Heatmap3D, guard: int = 2, train: int = 8, pfa: float = 1e-4
) -> PointCloud:
    """Cell-averaging CFAR along the range axis of each (az, el) ray.

    ``train`` counts training cells per side; the noise estimate averages
    the 2*train cells flanking the guard interval, and a cell fires when
    its power exceeds alpha times that estimate. Detections map to
    Cartesian points via the ray direction and calibrated bin range.
    """
    if train < 1:
        raise InvalidConfig(f"train must be >= 1, got {train!r}")
    if guard < 0:
        raise InvalidConfig(f"guard must be >= 0, got {guard!r}")
    n_rng = heat.grid.range_bins
    margin = guard + train
    if n_rng < 2 * margin + 1:
        raise InvalidConfig(
            f"heatmap has {n_rng} range bins; CFAR window needs at least {2 * margin + 1}"
        )
    power = heat.magnitudes.astype(float) ** 2
    alpha = cfar_threshold_factor(pfa, 2 * train)

    # Train-cell sums on both sides of each cell, via a cumsum along range.
    cs = np.zeros(power.shape[:2] + (n_rng + 1,))
    np.cumsum(power, axis=2, out=cs[:, :, 1:])
    k = np.arange(margin, n_rng - margin)
    left = cs[:, :, k - guard] - cs[:, :, k - margin]
    right = cs[:, :, k + margin + 1] - cs[:, :, k + guard + 1]
    noise = (left + right) / (2.0 * train)
    cells = power[:, :, margin : n_rng - margin]
    fired = cells > alpha * noise

    az_idx, el_idx, k_idx = np.nonzero(fired)
    if len(az_idx) == 0:
        return PointCloud(points=np.empty((0, 3)), intensity=np.empty(0))
    rng_idx = k_idx + margin
    ranges = heat.ranges()[rng_idx]
    azimuths = heat.grid.azimuths()[az_idx]
    elevations = heat.grid.elevations()[el_idx]
    ce = np.cos(elevations)
    points = np.column_stack(
        [
            ranges * ce * np.cos(azimuths),
            ranges * ce * np.sin(azimuths),
            ranges * np.sin(elevations),
        ]
    )
    return PointCloud(points=points, intensity=heat.magnitudes[az_idx, el_idx, rng_idx])


def _projected(cloud: PointCloud, dims: str) -> np.ndarray:
    if dims == "3d":
        return cloud.points
    if dims == "2d":
        return cloud.points[:, :2]
    raise InvalidConfig(f"dims must be '2d' or '3d', got {dims!r}")


def _directed_mean_min(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over a of the distance to the nearest point of b."""
    if max(len(a), len(b)) > _BRUTE_FORCE_LIMIT:
        dists, _ = cKDTree(b).query(a, k=1)
        return float(np.mean(dists))
    return float(np.mean(cdist(a, b).min(axis=1)))


def _check_nonempty(a: PointCloud, b: PointCloud) -> None:
    if len(a) == 0 or len(b) == 0:
        raise InvalidConfig("point-cloud metrics need two non-empty clouds")


def chamfer(a: PointCloud, b: PointCloud, dims: str = "3d") -> float:
    """Symmetric Chamfer distance: mean of the two directed mean-NN terms."""
    _check_nonempty(a, b)
    pa, pb = _projected(a, dims), _projected(b, dims)
    return 0.5 * (_directed_mean_min(pa, pb) + _directed_mean_min(pb, pa))


def modified_hausdorff(a: PointCloud, b: PointCloud, dims: str = "3d") -> float:
    """Dubuisson-Jain variant: max of the two directed mean-NN terms."""
    _check_nonempty(a, b)
    pa, pb = _projected(a, dims), _projected(b, dims)
    return max(_directed_mean_min(pa, pb), _directed_mean_min(pb, pa))


def range_image_mae(
    pred: np.ndarray, truth: np.ndarray, mask: np.ndarray | None = None
) -> float:
    """Mean absolute error over unmasked pixels (mask True = excluded)."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise InvalidConfig(f"shape mismatch {pred.shape} vs {truth.shape}")
    keep = np.ones(pred.shape, dtype=bool)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != pred.shape:
            raise InvalidConfig(f"mask shape {mask.shape} does not match {pred.shape}")
        keep = ~mask
    if not keep.any():
        raise InvalidConfig("all pixels are masked")
    return float(np.mean(np.abs(pred[keep] - truth[keep])))


# -- file formats ----------------------------------------------------------


def save_ply(cloud: PointCloud, path: str | Path) -> None:
    """ASCII PLY with x y z intensity per vertex."""
    with open(path, "w") as fh:
        fh.write(
            "ply\nformat ascii 1.0\n"
            f"comment frame {cloud.frame}\n"
            f"element vertex {len(cloud)}\n"
            "property float x\nproperty float y\nproperty float z\n"
            "property float intensity\nend_header\n"
        )
        for (x, y, z), w in zip(cloud.points, cloud.intensity):
            fh.write(f"{x:.6f} {y:.6f} {z:.6f} {w:.6f}\n")


def load_ply(path: str | Path) -> PointCloud:
    with open(path) as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise FormatError(f"{path}: not a PLY file")
        count = None
        frame = "robot-t0"
        props: list[str] = []
        while True:
            line = fh.readline()
            if not line:
                raise FormatError(f"{path}: missing end_header")
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "format" and parts[1] != "ascii":
                raise FormatError(f"{path}: only ascii PLY is supported")
            if parts[0] == "comment" and len(parts) >= 3 and parts[1] == "frame":
                frame = parts[2]
            if parts[0] == "element" and parts[1] == "vertex":
                count = int(parts[2])
            if parts[0] == "property":
                props.append(parts[-1])
            if parts[0] == "end_header":
                break
        if count is None:
            raise FormatError(f"{path}: no vertex element")
        rows = np.loadtxt(fh, ndmin=2) if count else np.empty((0, max(len(props), 3)))
    if count and rows.shape != (count, len(props)):
        raise FormatError(f"{path}: vertex data shape {rows.shape} does not match header")
    cols = {name: i for i, name in enumerate(props)}
    try:
        points = rows[:, [cols["x"], cols["y"], cols["z"]]]
    except KeyError as exc:
        raise FormatError(f"{path}: missing coordinate property {exc}") from exc
    intensity = rows[:, cols["intensity"]] if "intensity" in cols else None
    return PointCloud(points=points, intensity=intensity, frame=frame)


def save_range_image_csv(image_m: np.ndarray, path: str | Path) -> None:
    np.savetxt(path, np.asarray(image_m, dtype=float), delimiter=",", fmt="%.6f")


def save_range_image_pgm(image_m: np.ndarray, path: str | Path) -> None:
    """ASCII 16-bit PGM; pixel value = range in millimetres, clipped at 65535."""
    image = np.asarray(image_m, dtype=float)
    mm = np.clip(np.round(image * 1000.0), 0, 65535).astype(int)
    with open(path, "w") as fh:
        fh.write(f"P2\n{mm.shape[1]} {mm.shape[0]}\n65535\n")
        for row in mm:
            fh.write(" ".join(str(v) for v in row) + "\n")


def load_range_image_pgm(path: str | Path) -> np.ndarray:
    """Inverse of save_range_image_pgm, back to metres."""
    with open(path) as fh:
        tokens: list[str] = []
        for line in fh:
            hash_at = line.find("#")
            if hash_at >= 0:
                line = line[:hash_at]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise FormatError(f"{path}: not an ASCII PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array([int(t) for t in tokens[4 : 4 + width * height]], dtype=float)
    if data.size != width * height:
        raise FormatError(f"{path}: truncated pixel data")
    if maxval != 65535:
        raise FormatError(f"{path}: expected 16-bit PGM, maxval {maxval}")
    return data.reshape(height, width) / 1000.0
