"""ADD / ADD-S pose-error metrics and recall statistics."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import kernels
from .errors import InsufficientPointsError, UndefinedRecallError
from .geometry import ObjectModel, Pose, apply_pose

# exact O(M^2) diameter up to this size; convex-hull prefilter above
_EXACT_DIAMETER_LIMIT = 5000


def add_metric(pred: Pose, gt: Pose, model: ObjectModel) -> float:
    """Mean distance between corresponding model points under the two poses."""
    p = apply_pose(pred, model.points)
    g = apply_pose(gt, model.points)
    return float(np.linalg.norm(p - g, axis=1).mean())


def adds_metric(pred: Pose, gt: Pose, model: ObjectModel) -> float:
    """Mean distance from each gt-transformed point to the nearest
    pred-transformed point (the symmetric-object variant)."""
    p = apply_pose(pred, model.points)
    g = apply_pose(gt, model.points)
    return float(kernels.nn_dists(g, p).mean())


def pose_error(pred: Pose, gt: Pose, model: ObjectModel) -> float:
    """ADD for asymmetric objects, ADD-S for symmetric ones."""
    if model.symmetric:
        return adds_metric(pred, gt, model)
    return add_metric(pred, gt, model)


def recall_at_threshold(
    errors: Sequence[float], model: ObjectModel, fraction: float = 0.1
) -> float:
    """Percentage of errors strictly below fraction * diameter."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise UndefinedRecallError("recall over an empty error list is undefined")
    if fraction <= 0:
        raise ValueError(f"fraction must be positive, got {fraction}")
    threshold = fraction * model.diameter
    return float(100.0 * np.count_nonzero(errors < threshold) / errors.size)


def object_diameter(points: np.ndarray) -> float:
    """Max pairwise Euclidean distance between model points."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] < 2:
        raise InsufficientPointsError(f"diameter needs >= 2 points, got {pts.shape[0]}")
    if pts.shape[0] > _EXACT_DIAMETER_LIMIT:
        from scipy.spatial import ConvexHull  # noqa: PLC0415

        # diameter endpoints are hull vertices; exact on the reduced set
        pts = pts[ConvexHull(pts).vertices]
    return kernels.max_pairwise_dist(pts)
