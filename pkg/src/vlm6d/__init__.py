"""vlm6d: dual-stream RGB-D 6DoF object pose estimation.

Library layout:
    geometry       camera model, rigid transforms, 6D rotation decoding
    metrics        ADD / ADD-S errors, recall, object diameter
    pointcloud     farthest-point sampling, ball query, resampling
    kernels        compiled/pure backend selection for the hot loops
    depth_encoder  hierarchical point-cloud encoder (f_depth, 1024-d)
    rgb_encoder    vision transformer (f_rgb, 768-d)
    fusion         cross-modal fusion, prediction heads, training loss
    model          assembled network + checkpoints
    data           BOP ingestion, preprocessing, synthetic scenes
    harness        train / evaluate / infer / CLI
"""

from .geometry import (
    CameraIntrinsics,
    ObjectModel,
    PointCloud,
    Pose,
    apply_pose,
    backproject_depth,
    project_points,
    rotation_from_6d,
)
from .metrics import add_metric, adds_metric, object_diameter, recall_at_threshold
from .pointcloud import ball_query, farthest_point_sample, normalize_cloud, resample_fixed

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "ObjectModel",
    "PointCloud",
    "Pose",
    "apply_pose",
    "backproject_depth",
    "project_points",
    "rotation_from_6d",
    "add_metric",
    "adds_metric",
    "object_diameter",
    "recall_at_threshold",
    "ball_query",
    "farthest_point_sample",
    "normalize_cloud",
    "resample_fixed",
    "__version__",
]
