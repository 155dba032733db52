"""Per-annotation preprocessing from an RGB-D frame to network inputs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import cv2
import numpy as np

from ..errors import ContractError, DegenerateSampleError
from ..geometry import Pose, backproject_depth
from ..pointcloud import resample_fixed
from .bop import RGBDFrame

IMAGE_SIZE = 224
CLOUD_POINTS = 2048
CROP_PAD_FRACTION = 0.2
MIN_VALID_DEPTH_PIXELS = 32

# standard ImageNet channel statistics on [0, 1] images; override here if
# a dataset ships its own
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])


@dataclass(frozen=True)
class ModelInput:
    image: np.ndarray  # 224 x 224 x 3, channel-normalized, float32
    cloud: np.ndarray  # 2048 x 3, camera frame, meters
    cloud_centroid: np.ndarray  # 3, meters, recorded before any normalization
    object_id: int
    crop: Tuple[int, int, int, int]  # x0, y0, x1, y1 of the source crop
    gt_pose: Optional[Pose] = None


def square_crop(bbox: Tuple[int, int, int, int], width: int, height: int) -> Tuple[int, int, int, int]:
    """Pad a bbox by 20%, square it around its center, clamp to the image."""
    x, y, w, h = bbox
    if w <= 0 or h <= 0:
        raise ContractError(f"bbox {bbox} has non-positive area")
    side = max(w, h) * (1.0 + CROP_PAD_FRACTION)
    cx, cy = x + w / 2.0, y + h / 2.0
    x0 = int(np.floor(cx - side / 2.0))
    y0 = int(np.floor(cy - side / 2.0))
    x1 = int(np.ceil(cx + side / 2.0))
    y1 = int(np.ceil(cy + side / 2.0))
    return max(0, x0), max(0, y0), min(width, x1), min(height, y1)


def normalize_image(rgb_crop: np.ndarray) -> np.ndarray:
    """Resize to 224x224 (bilinear) and apply per-channel normalization."""
    resized = cv2.resize(
        rgb_crop.astype(np.float32), (IMAGE_SIZE, IMAGE_SIZE), interpolation=cv2.INTER_LINEAR
    )
    return ((resized / 255.0 - IMAGENET_MEAN) / IMAGENET_STD).astype(np.float32)


def preprocess(
    frame: RGBDFrame,
    annotation_index: int,
    seed: int,
    include_gt: bool = False,
) -> ModelInput:
    """Crop, resize and normalize the RGB; back-project and resample the depth.

    Deterministic for a fixed (frame, annotation_index, seed).
    """
    if not 0 <= annotation_index < len(frame.annotations):
        raise ContractError(f"annotation index {annotation_index} out of range")
    ann = frame.annotations[annotation_index]
    h, w = frame.depth.shape
    x0, y0, x1, y1 = square_crop(ann.bbox, w, h)
    if x1 <= x0 or y1 <= y0:
        raise ContractError(f"bbox {ann.bbox} clamps to an empty crop")

    image = normalize_image(frame.rgb[y0:y1, x0:x1])

    mask = np.zeros((h, w), dtype=bool)
    mask[y0:y1, x0:x1] = True
    mask &= frame.depth > 0
    n_valid = int(mask.sum())
    if n_valid < MIN_VALID_DEPTH_PIXELS:
        raise DegenerateSampleError(
            f"only {n_valid} valid depth pixels in crop (need {MIN_VALID_DEPTH_PIXELS})"
        )
    raw_cloud = backproject_depth(frame.depth, frame.intrinsics, valid_mask=mask)
    cloud = resample_fixed(raw_cloud.coords, n_target=CLOUD_POINTS, seed=seed)
    centroid = cloud.coords.mean(axis=0)
    return ModelInput(
        image=image,
        cloud=cloud.coords,
        cloud_centroid=centroid,
        object_id=ann.object_id,
        crop=(x0, y0, x1, y1),
        gt_pose=ann.pose if include_gt else None,
    )
