"""Single-sample inference."""

from __future__ import annotations

from pathlib import Path
from typing import Tuple

import torch

from ..data.bop import RGBDFrame
from ..data.preprocess import preprocess
from ..fusion import PosePrediction, decode_pose_numpy
from ..geometry import Pose
from ..model import PoseNet, load_model


def infer_model(
    model: PoseNet, frame: RGBDFrame, annotation_index: int, seed: int = 0
) -> Tuple[PosePrediction, Pose]:
    """Deterministic eval-mode forward pass on one annotation's crop."""
    inputs = preprocess(frame, annotation_index, seed=seed)
    dtype = model.config.torch_dtype()
    model.eval()
    with torch.no_grad():
        pred, _ = model(
            torch.as_tensor(inputs.image, dtype=dtype),
            torch.as_tensor(inputs.cloud, dtype=dtype),
        )
    return pred, decode_pose_numpy(pred, inputs.cloud_centroid)


def infer(
    checkpoint: str | Path, frame: RGBDFrame, annotation_index: int, seed: int = 0
) -> Tuple[PosePrediction, Pose]:
    model, _, _ = load_model(checkpoint)
    return infer_model(model, frame, annotation_index, seed=seed)
