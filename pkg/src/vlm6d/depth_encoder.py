"""Hierarchical point-cloud encoder producing the 1024-d depth feature.

Three set-abstraction stages over a 2048-point cloud: sample centers by
farthest-point sampling, group in-radius neighbors, run a shared per-point
MLP and max-pool per group. The final stage pools globally. Sampling and
grouping run on detached coordinates (indices are piecewise constant), so
gradients flow through the gathered coordinates and features only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import torch
from torch import nn

from . import kernels
from .errors import ConfigError, ContractError
from .pointcloud import farthest_point_sample

INPUT_POINTS = 2048
DEPTH_FEATURE_DIM = 1024


@dataclass(frozen=True)
class SetAbstractionConfig:
    """One sampling/grouping/aggregation stage. n_centers=0 pools globally."""

    n_centers: int
    radius: float  # in normalized-unit-ball coordinates; unused when global
    nsample: int
    mlp_widths: List[int]

    def __post_init__(self):
        if not self.mlp_widths or any(w <= 0 for w in self.mlp_widths):
            raise ConfigError(f"invalid mlp widths {self.mlp_widths}")


def default_layer_schedule() -> List[SetAbstractionConfig]:
    """The paper-mandated widths with our radius/nsample defaults."""
    return [
        SetAbstractionConfig(n_centers=512, radius=0.2, nsample=32, mlp_widths=[3, 64, 64, 128]),
        SetAbstractionConfig(n_centers=128, radius=0.4, nsample=32, mlp_widths=[3 + 128, 128, 128, 256]),
        SetAbstractionConfig(n_centers=0, radius=0.0, nsample=0, mlp_widths=[3 + 256, 256, 512, 1024]),
    ]


def schedule_to_manifest(schedule: List[SetAbstractionConfig]) -> list:
    return [
        {"n_centers": c.n_centers, "radius": c.radius, "nsample": c.nsample, "mlp_widths": list(c.mlp_widths)}
        for c in schedule
    ]


def schedule_from_manifest(entries: list) -> List[SetAbstractionConfig]:
    return [SetAbstractionConfig(**e) for e in entries]


class SharedMLP(nn.Module):
    """Per-point Linear + BatchNorm + ReLU stack over the last dimension."""

    def __init__(self, widths: List[int]):
        super().__init__()
        self.linears = nn.ModuleList(
            nn.Linear(widths[i], widths[i + 1]) for i in range(len(widths) - 1)
        )
        self.norms = nn.ModuleList(nn.BatchNorm1d(w) for w in widths[1:])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        shape = x.shape
        x = x.reshape(-1, shape[-1])
        for linear, norm in zip(self.linears, self.norms):
            x = torch.relu(norm(linear(x)))
        return x.reshape(*shape[:-1], x.shape[-1])


class SetAbstraction(nn.Module):
    def __init__(self, config: SetAbstractionConfig, in_features: int):
        super().__init__()
        expected = 3 + in_features
        if config.mlp_widths[0] != expected:
            raise ConfigError(
                f"first MLP width {config.mlp_widths[0]} != 3 + incoming features {in_features}"
            )
        self.config = config
        self.mlp = SharedMLP(config.mlp_widths)

    def forward(
        self, coords: torch.Tensor, features: Optional[torch.Tensor]
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """coords: K x 3, features: K x C or None -> (new coords, new features)."""
        cfg = self.config
        if cfg.n_centers == 0:
            # global stage: one group over every point, xyz concatenated in
            group = coords if features is None else torch.cat([coords, features], dim=1)
            pooled = self.mlp(group.unsqueeze(0)).max(dim=1).values  # 1 x C_out
            return coords.mean(dim=0, keepdim=True), pooled
        coords_np = coords.detach().cpu().double().numpy()
        if coords_np.shape[0] < cfg.n_centers:
            raise ContractError(
                f"stage needs >= {cfg.n_centers} points, got {coords_np.shape[0]}"
            )
        center_idx = farthest_point_sample(coords_np, cfg.n_centers)
        neighbor_idx = kernels.ball_query_nearest(
            coords_np[center_idx], coords_np, cfg.radius, cfg.nsample
        )
        centers = coords[center_idx]  # K x 3
        rel = coords[neighbor_idx] - centers.unsqueeze(1)  # K x ns x 3
        if features is None:
            group = rel
        else:
            group = torch.cat([rel, features[neighbor_idx]], dim=2)
        new_features = self.mlp(group).max(dim=1).values  # K x C_out
        return centers, new_features


class DepthEncoder(nn.Module):
    """Encode a 2048-point camera-frame cloud into a 1024-d global feature."""

    def __init__(self, schedule: Optional[List[SetAbstractionConfig]] = None):
        super().__init__()
        self.schedule = schedule or default_layer_schedule()
        stages = []
        in_features = 0
        for cfg in self.schedule:
            stages.append(SetAbstraction(cfg, in_features))
            in_features = cfg.mlp_widths[-1]
        self.stages = nn.ModuleList(stages)
        self.output_dim = in_features

    def forward(self, cloud: torch.Tensor) -> torch.Tensor:
        return self.forward_with_states(cloud)[-1][1].squeeze(0)

    def forward_with_states(
        self, cloud: torch.Tensor
    ) -> List[Tuple[torch.Tensor, torch.Tensor]]:
        """Run all stages, returning every (coords, features) intermediate."""
        if cloud.ndim != 2 or cloud.shape[1] != 3:
            raise ContractError(f"expected N x 3 cloud, got {tuple(cloud.shape)}")
        if cloud.shape[0] != INPUT_POINTS:
            raise ContractError(f"expected {INPUT_POINTS} points, got {cloud.shape[0]}")
        coords = normalize_cloud_torch(cloud)
        features: Optional[torch.Tensor] = None
        states: List[Tuple[torch.Tensor, torch.Tensor]] = []
        for stage in self.stages:
            coords, features = stage(coords, features)
            states.append((coords, features))
        return states


def normalize_cloud_torch(coords: torch.Tensor) -> torch.Tensor:
    """Differentiable twin of pointcloud.normalize_cloud (coords only).

    The centroid is accumulated over lexicographically sorted rows so the
    floating-point sum (and hence the whole encoder) is bitwise invariant
    to input permutations.
    """
    c = coords.detach().cpu().numpy()
    order = np.lexsort((c[:, 2], c[:, 1], c[:, 0]))
    centroid = coords[order].mean(dim=0)
    centered = coords - centroid
    scale = centered.norm(dim=1).max()
    if scale < 1e-9:
        return centered
    return centered / scale


def encode_depth(encoder: DepthEncoder, cloud: np.ndarray) -> np.ndarray:
    """Eval-mode convenience wrapper over numpy in/out."""
    encoder.eval()
    with torch.no_grad():
        t = torch.as_tensor(np.asarray(cloud), dtype=next(encoder.parameters()).dtype)
        return encoder(t).cpu().numpy()
