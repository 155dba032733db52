"""Camera geometry and rigid-transform primitives.

All coordinates are metric (meters) in the camera frame unless stated
otherwise; pixel coordinates follow the usual (u, v) = (column, row)
convention with the origin at the top-left pixel center.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ContractError,
    DegenerateRotationError,
    EmptyCloudError,
    NonPositiveDepthError,
)

ORTHONORMALITY_TOL = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ContractError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ContractError(
                f"principal point ({self.cx}, {self.cy}) outside image {self.width}x{self.height}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]],
            dtype=np.float64,
        )

    @classmethod
    def from_matrix(cls, k: np.ndarray, width: int, height: int) -> "CameraIntrinsics":
        k = np.asarray(k, dtype=np.float64).reshape(3, 3)
        return cls(fx=k[0, 0], fy=k[1, 1], cx=k[0, 2], cy=k[1, 2], width=width, height=height)


@dataclass(frozen=True)
class Pose:
    """Rigid transform mapping model-frame points into the camera frame."""

    rotation: np.ndarray  # 3x3, orthonormal, det +1
    translation: np.ndarray  # 3-vector, meters

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        if np.abs(r.T @ r - np.eye(3)).max() > ORTHONORMALITY_TOL:
            raise ContractError("rotation is not orthonormal within 1e-6")
        if abs(np.linalg.det(r) - 1.0) > ORTHONORMALITY_TOL:
            raise ContractError("rotation determinant is not +1 within 1e-6")

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply `other` first, then `self`."""
        return Pose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        return Pose(self.rotation.T, -self.rotation.T @ self.translation)


@dataclass(frozen=True)
class PointCloud:
    """N x 3 camera-frame coordinates with optional per-point colors in [0, 1]."""

    coords: np.ndarray
    colors: Optional[np.ndarray] = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "coords", coords)
        if not np.isfinite(coords).all():
            raise ContractError("point cloud contains non-finite coordinates")
        if self.colors is not None:
            colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
            if colors.shape[0] != coords.shape[0]:
                raise ContractError(
                    f"colors count {colors.shape[0]} != coords count {coords.shape[0]}"
                )
            object.__setattr__(self, "colors", colors)

    def __len__(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class ObjectModel:
    """A rigid object's point model plus the metadata the metrics need."""

    object_id: int
    points: np.ndarray  # M x 3, model frame, meters
    diameter: float  # max pairwise point distance, meters
    symmetric: bool = False
    name: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if pts.shape[0] < 4:
            raise ContractError(f"object model needs at least 4 points, got {pts.shape[0]}")
        # coplanarity check: rank of centered points must be 3
        centered = pts - pts.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-12) < 3:
            raise ContractError("object model points are coplanar")
        if self.diameter <= 0:
            raise ContractError(f"diameter must be positive, got {self.diameter}")


def backproject_depth(
    depth: np.ndarray,
    intrinsics: CameraIntrinsics,
    valid_mask: Optional[np.ndarray] = None,
    colors: Optional[np.ndarray] = None,
) -> PointCloud:
    """Lift a depth map to a camera-frame point cloud.

    Pixel (u, v) with depth d maps to ((u-cx)d/fx, (v-cy)d/fy, d). One point
    per valid pixel, in row-major pixel order. `colors` is an optional H x W x 3
    image in [0, 1] sampled at the same pixels.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ContractError(f"depth must be H x W, got shape {depth.shape}")
    if valid_mask is None:
        valid_mask = depth > 0
    else:
        valid_mask = np.asarray(valid_mask, dtype=bool) & (depth > 0)
    vs, us = np.nonzero(valid_mask)
    if vs.size == 0:
        raise EmptyCloudError("no valid depth pixels to back-project")
    d = depth[vs, us]
    x = (us - intrinsics.cx) * d / intrinsics.fx
    y = (vs - intrinsics.cy) * d / intrinsics.fy
    coords = np.stack([x, y, d], axis=1)
    point_colors = None
    if colors is not None:
        point_colors = np.asarray(colors, dtype=np.float64)[vs, us]
    return PointCloud(coords=coords, colors=point_colors)


def project_points(points: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Project camera-frame points to pixel coordinates (u, v). Requires z > 0."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    z = pts[:, 2]
    if np.any(z <= 0):
        raise NonPositiveDepthError("cannot project points with z <= 0")
    u = intrinsics.fx * pts[:, 0] / z + intrinsics.cx
    v = intrinsics.fy * pts[:, 1] / z + intrinsics.cy
    return np.stack([u, v], axis=1)


def apply_pose(pose: Pose, points: np.ndarray) -> np.ndarray:
    """Transform model-frame points into the camera frame: R p + t per row."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return pts @ pose.rotation.T + pose.translation


def rotation_from_6d(r6: np.ndarray) -> np.ndarray:
    """Decode a 6D rotation representation via Gram-Schmidt.

    b1 = normalize(a1), b2 = normalize(a2 - (b1.a2) b1), b3 = b1 x b2.
    Columns of the result are (b1, b2, b3). Scale-invariant in both halves.
    """
    r6 = np.asarray(r6, dtype=np.float64).reshape(6)
    a1, a2 = r6[:3], r6[3:]
    n1 = np.linalg.norm(a1)
    if n1 < 1e-12:
        raise DegenerateRotationError("first 3-vector of 6D rotation input is ~zero")
    b1 = a1 / n1
    a2_orth = a2 - (b1 @ a2) * b1
    n2 = np.linalg.norm(a2_orth)
    if n2 < 1e-12:
        raise DegenerateRotationError("second 3-vector is parallel to the first")
    b2 = a2_orth / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=1)
