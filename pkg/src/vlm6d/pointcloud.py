"""Deterministic point-cloud primitives feeding the depth encoder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from ._kernels_py import argmax_with_tiebreak
from .errors import EmptyCloudError, InsufficientPointsError
from .geometry import PointCloud


@dataclass(frozen=True)
class SampledGroups:
    """Output of sampling + grouping: K centers with nsample neighbors each."""

    center_indices: Optional[np.ndarray]  # K, indices into the source cloud (None for external centers)
    neighbor_indices: np.ndarray  # K x nsample
    relative_coords: np.ndarray  # K x nsample x 3, neighbor minus center


def farthest_point_sample(coords: np.ndarray, k: int) -> np.ndarray:
    """Greedy farthest-point sampling; a pure function of the geometry.

    The first point is the one farthest from the centroid, each next point
    maximizes the min-distance to the selected set; exact ties break on the
    lexicographically smallest (x, y, z). Returns indices in selection order.
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64).reshape(-1, 3)
    n = coords.shape[0]
    if k < 1:
        raise InsufficientPointsError(f"k must be >= 1, got {k}")
    if n < k:
        raise InsufficientPointsError(f"cannot sample {k} points from {n}")
    centroid = coords.mean(axis=0)
    d2 = ((coords - centroid) ** 2).sum(axis=1)
    first = argmax_with_tiebreak(d2, coords)
    return kernels.fps_greedy(coords, k, first)


def ball_query(
    centers: np.ndarray, coords: np.ndarray, radius: float, nsample: int,
    center_indices: Optional[np.ndarray] = None,
) -> SampledGroups:
    """Group up to `nsample` in-radius neighbors around each center.

    Neighbors come in ascending index order; short groups are padded by
    repeating the first neighbor found. A center with no in-radius neighbor
    falls back to its nearest point (itself, when the center is drawn from
    the cloud).
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if nsample < 1:
        raise ValueError(f"nsample must be >= 1, got {nsample}")
    centers = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 3)
    coords = np.ascontiguousarray(coords, dtype=np.float64).reshape(-1, 3)
    neighbor_indices = kernels.ball_query(centers, coords, float(radius), int(nsample))
    relative = coords[neighbor_indices] - centers[:, None, :]
    return SampledGroups(
        center_indices=None if center_indices is None else np.asarray(center_indices),
        neighbor_indices=neighbor_indices,
        relative_coords=relative,
    )


def normalize_cloud(coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Center on the centroid and scale into the unit ball.

    Returns (normalized, centroid, scale) with scale = max distance from the
    centroid, clamped to 1.0 below 1e-9 so a single point maps to the origin.
    """
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    if coords.shape[0] == 0:
        raise EmptyCloudError("cannot normalize an empty cloud")
    centroid = coords.mean(axis=0)
    centered = coords - centroid
    scale = float(np.linalg.norm(centered, axis=1).max())
    if scale < 1e-9:
        scale = 1.0
    return centered / scale, centroid, scale


def resample_fixed(
    coords: np.ndarray,
    colors: Optional[np.ndarray] = None,
    n_target: int = 2048,
    seed: int = 0,
) -> PointCloud:
    """Resample to exactly `n_target` points.

    Downsampling uses farthest-point sampling (deterministic); upsampling
    keeps every point and duplicates uniformly at random from the given seed.
    """
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    n = coords.shape[0]
    if n == 0:
        raise EmptyCloudError("cannot resample an empty cloud")
    if n >= n_target:
        idx = farthest_point_sample(coords, n_target)
    else:
        rng = np.random.default_rng(seed)
        extra = rng.integers(0, n, size=n_target - n)
        idx = np.concatenate([np.arange(n), extra])
    return PointCloud(
        coords=coords[idx],
        colors=None if colors is None else np.asarray(colors).reshape(-1, 3)[idx],
    )
