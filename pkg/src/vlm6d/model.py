"""The full dual-stream pose network and its checkpoint plumbing."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import torch
from torch import nn

from .checkpoint import load_checkpoint, save_checkpoint
from .depth_encoder import (
    DepthEncoder,
    SetAbstractionConfig,
    default_layer_schedule,
    schedule_from_manifest,
    schedule_to_manifest,
)
from .errors import IncompatibleWeightsError
from .fusion import DROPOUT_RATE, FeatureBundle, FusionNet, PosePrediction, PredictionHeads
from .rgb_encoder import RgbEncoderConfig, load_pretrained


@dataclass
class ModelConfig:
    n_classes: int = 8
    rgb: RgbEncoderConfig = field(default_factory=RgbEncoderConfig)
    depth_schedule: list[SetAbstractionConfig] = field(default_factory=default_layer_schedule)
    freeze_rgb: bool = True
    dropout_rate: float = DROPOUT_RATE  # training-time fusion dropout; 0 disables
    dtype: str = "float64"  # full double precision keeps eval passes bit-repeatable

    def torch_dtype(self) -> torch.dtype:
        return {"float32": torch.float32, "float64": torch.float64}[self.dtype]


class PoseNet(nn.Module):
    def __init__(self, config: Optional[ModelConfig] = None):
        super().__init__()
        self.config = config or ModelConfig()
        self.rgb_encoder, self.weight_manifest = load_pretrained(self.config.rgb)
        self.depth_encoder = DepthEncoder(self.config.depth_schedule)
        self.fusion = FusionNet(self.config.dropout_rate)
        self.heads = PredictionHeads(self.config.n_classes)
        self.to(self.config.torch_dtype())
        if self.config.freeze_rgb:
            for p in self.rgb_encoder.parameters():
                p.requires_grad_(False)

    def forward(
        self,
        image: torch.Tensor,
        cloud: torch.Tensor,
        training: bool = False,
        dropout_seed: int = 0,
        f_rgb: Optional[torch.Tensor] = None,
    ) -> Tuple[PosePrediction, FeatureBundle]:
        """image: 224x224x3 normalized, cloud: 2048x3 meters.

        `f_rgb` may be supplied to reuse a cached frozen-backbone feature.
        """
        if f_rgb is None:
            f_rgb = self.rgb_encoder(image)
        f_depth = self.depth_encoder(cloud)
        bundle = self.fusion(f_rgb, f_depth, training=training, dropout_seed=dropout_seed)
        return self.heads(bundle.f_fused), bundle

    def trainable_parameters(self):
        return [p for p in self.parameters() if p.requires_grad]


def model_manifest(config: ModelConfig) -> Dict:
    return {
        "kind": "posenet",
        "n_classes": config.n_classes,
        "rgb": vars(config.rgb),
        "depth_schedule": schedule_to_manifest(config.depth_schedule),
        "freeze_rgb": config.freeze_rgb,
        "dropout_rate": config.dropout_rate,
        "dtype": config.dtype,
    }


def config_from_manifest(manifest: Dict) -> ModelConfig:
    return ModelConfig(
        n_classes=manifest["n_classes"],
        rgb=RgbEncoderConfig(**manifest["rgb"]),
        depth_schedule=schedule_from_manifest(manifest["depth_schedule"]),
        freeze_rgb=manifest["freeze_rgb"],
        dropout_rate=manifest.get("dropout_rate", DROPOUT_RATE),
        dtype=manifest["dtype"],
    )


def save_model(model: PoseNet, path: str | Path, extra_tensors: Optional[Dict] = None,
               extra_manifest: Optional[Dict] = None) -> None:
    tensors = {f"model.{k}": v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    if extra_tensors:
        tensors.update(extra_tensors)
    manifest = model_manifest(model.config)
    if extra_manifest:
        manifest.update(extra_manifest)
    save_checkpoint(path, tensors, manifest)


def load_model(path: str | Path) -> Tuple[PoseNet, Dict[str, np.ndarray], Dict]:
    """Rebuild a PoseNet from a checkpoint.

    Returns (model, non-model tensors, manifest); the extra tensors carry
    optimizer state and counters for training resumption.
    """
    tensors, manifest = load_checkpoint(path)
    config = config_from_manifest(manifest)
    # avoid a pointless re-init from a registry source; weights come from the file
    if config.rgb.source != "random":
        config.rgb = RgbEncoderConfig(**{**vars(config.rgb), "source": "random"})
    model = PoseNet(config)
    state = model.state_dict()
    loaded = {}
    for name, param in state.items():
        key = f"model.{name}"
        if key not in tensors:
            raise IncompatibleWeightsError(f"checkpoint {path} is missing tensor '{key}'")
        arr = tensors[key]
        if tuple(arr.shape) != tuple(param.shape):
            raise IncompatibleWeightsError(
                f"tensor '{key}' has shape {tuple(arr.shape)}, expected {tuple(param.shape)}"
            )
        loaded[name] = torch.as_tensor(arr.copy())
    model.load_state_dict(loaded)
    extra = {k: v for k, v in tensors.items() if not k.startswith("model.")}
    return model, extra, manifest
