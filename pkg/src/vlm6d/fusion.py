"""Cross-modal fusion, the four prediction heads, and the training loss.

Fusion is the two-stage MLP
    h1      = Dropout(ReLU(Linear_{1792->1024}(concat(f_rgb, f_depth))))
    f_fused = Dropout(ReLU(Linear_{1024->512}(h1)))
with inverted dropout at rate 0.3, active only in training and driven by an
explicit seed so training steps are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import torch
from torch import nn

from .errors import ContractError
from .geometry import ObjectModel, Pose

RGB_DIM = 768
DEPTH_DIM = 1024
CONCAT_DIM = RGB_DIM + DEPTH_DIM  # 1792
HIDDEN_DIM = 1024
FUSED_DIM = 512
DROPOUT_RATE = 0.3

DEFAULT_LAMBDA_CLS = 0.1
DEFAULT_LAMBDA_CONF = 0.1
DEFAULT_TAU = 0.05  # meters


@dataclass
class FeatureBundle:
    f_rgb: torch.Tensor  # 768
    f_depth: torch.Tensor  # 1024
    f_concat: torch.Tensor  # 1792
    h1: torch.Tensor  # 1024
    f_fused: torch.Tensor  # 512


@dataclass
class PosePrediction:
    rotation_6d: torch.Tensor  # 6
    translation_offset: torch.Tensor  # 3, meters, relative to the cloud centroid
    confidence: torch.Tensor  # scalar in (0, 1)
    class_logits: torch.Tensor  # n_classes


class FusionNet(nn.Module):
    def __init__(self, dropout_rate: float = DROPOUT_RATE):
        super().__init__()
        self.fc1 = nn.Linear(CONCAT_DIM, HIDDEN_DIM)
        self.fc2 = nn.Linear(HIDDEN_DIM, FUSED_DIM)
        self.dropout_rate = dropout_rate

    def forward(
        self,
        f_rgb: torch.Tensor,
        f_depth: torch.Tensor,
        training: bool = False,
        dropout_seed: int = 0,
    ) -> FeatureBundle:
        if f_rgb.shape != (RGB_DIM,) or f_depth.shape != (DEPTH_DIM,):
            raise ContractError(
                f"expected ({RGB_DIM},) and ({DEPTH_DIM},), got "
                f"{tuple(f_rgb.shape)} and {tuple(f_depth.shape)}"
            )
        f_concat = torch.cat([f_rgb, f_depth])
        gen = None
        if training and self.dropout_rate > 0:
            gen = torch.Generator().manual_seed(dropout_seed)
        h1 = _dropout(torch.relu(self.fc1(f_concat)), self.dropout_rate, gen)
        f_fused = _dropout(torch.relu(self.fc2(h1)), self.dropout_rate, gen)
        return FeatureBundle(f_rgb=f_rgb, f_depth=f_depth, f_concat=f_concat, h1=h1, f_fused=f_fused)


def _dropout(x: torch.Tensor, rate: float, gen: Optional[torch.Generator]) -> torch.Tensor:
    if gen is None:
        return x
    keep = (torch.rand(x.shape, generator=gen, dtype=x.dtype) >= rate).to(x.dtype)
    return x * keep / (1.0 - rate)


class PredictionHeads(nn.Module):
    """Four independent affine heads over the fused feature."""

    def __init__(self, n_classes: int):
        super().__init__()
        self.rotation = nn.Linear(FUSED_DIM, 6)
        self.translation = nn.Linear(FUSED_DIM, 3)
        self.confidence = nn.Linear(FUSED_DIM, 1)
        self.classifier = nn.Linear(FUSED_DIM, n_classes)
        # start at (identity rotation, centroid translation): zero weights,
        # identity 6D bias, so the initial pose loss is bounded by geometry
        with torch.no_grad():
            self.rotation.weight.zero_()
            self.rotation.bias.copy_(torch.tensor([1.0, 0, 0, 0, 1.0, 0]))
            self.translation.weight.zero_()
            self.translation.bias.zero_()

    def forward(self, f_fused: torch.Tensor) -> PosePrediction:
        if f_fused.shape != (FUSED_DIM,):
            raise ContractError(f"expected ({FUSED_DIM},) fused feature, got {tuple(f_fused.shape)}")
        return PosePrediction(
            rotation_6d=self.rotation(f_fused),
            translation_offset=self.translation(f_fused),
            confidence=torch.sigmoid(self.confidence(f_fused)).squeeze(-1),
            class_logits=self.classifier(f_fused),
        )


def rotation_from_6d_torch(r6: torch.Tensor) -> torch.Tensor:
    """Differentiable twin of geometry.rotation_from_6d (columns b1, b2, b3)."""
    a1, a2 = r6[:3], r6[3:]
    b1 = a1 / a1.norm().clamp_min(1e-12)
    a2_orth = a2 - (b1 @ a2) * b1
    b2 = a2_orth / a2_orth.norm().clamp_min(1e-12)
    b3 = torch.linalg.cross(b1, b2)
    return torch.stack([b1, b2, b3], dim=1)


def decode_pose(pred: PosePrediction, cloud_centroid: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Decoded (rotation matrix, translation) as torch tensors."""
    r = rotation_from_6d_torch(pred.rotation_6d)
    t = cloud_centroid + pred.translation_offset
    return r, t


def decode_pose_numpy(pred: PosePrediction, cloud_centroid) -> Pose:
    import numpy as np  # noqa: PLC0415

    r, t = decode_pose(pred, torch.as_tensor(cloud_centroid, dtype=pred.rotation_6d.dtype))
    return Pose(r.detach().cpu().numpy().astype(np.float64), t.detach().cpu().numpy().astype(np.float64))


def pose_loss(
    pred: PosePrediction,
    gt: Pose,
    model: ObjectModel,
    cloud_centroid,
    gt_class: int,
    lambda_cls: float = DEFAULT_LAMBDA_CLS,
    lambda_conf: float = DEFAULT_LAMBDA_CONF,
    tau: float = DEFAULT_TAU,
) -> Tuple[torch.Tensor, Dict[str, torch.Tensor]]:
    """Point-matching pose loss plus classification and confidence terms.

    L_pose is the mean model-point distance under predicted vs ground-truth
    pose: matched points for asymmetric objects, nearest-point for symmetric
    ones. The confidence head is supervised toward exp(-L_pose / tau).
    Returns (total, components); total = L_pose + l_cls*L_cls + l_conf*L_conf.
    """
    n_classes = pred.class_logits.shape[0]
    if not 0 <= gt_class < n_classes:
        raise ContractError(f"gt_class {gt_class} out of range for {n_classes} classes")
    dtype = pred.rotation_6d.dtype
    pts = torch.as_tensor(model.points, dtype=dtype)
    centroid = torch.as_tensor(cloud_centroid, dtype=dtype)
    r_pred, t_pred = decode_pose(pred, centroid)
    pred_pts = pts @ r_pred.T + t_pred
    gt_pts = pts @ torch.as_tensor(gt.rotation, dtype=dtype).T + torch.as_tensor(
        gt.translation, dtype=dtype
    )
    if model.symmetric:
        l_pose = torch.cdist(gt_pts, pred_pts).min(dim=1).values.mean()
    else:
        l_pose = (pred_pts - gt_pts).norm(dim=1).mean()
    l_cls = nn.functional.cross_entropy(
        pred.class_logits.unsqueeze(0),
        torch.tensor([gt_class]),
    )
    conf_target = torch.exp(-l_pose / tau)
    l_conf = (pred.confidence - conf_target) ** 2
    total = l_pose + lambda_cls * l_cls + lambda_conf * l_conf
    components = {"pose": l_pose, "cls": l_cls, "conf": l_conf}
    return total, components
