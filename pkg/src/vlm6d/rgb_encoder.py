"""Vision-transformer RGB branch.

Patchifies a normalized 224x224 image into non-overlapping patches, projects
each to a 768-d embedding, prepends a learnable class token, adds positional
encodings, and runs 12 pre-norm transformer layers. The class-token output
of the final layer (after the final LayerNorm) is the RGB feature.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import torch
from torch import nn

from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigError, ContractError, IncompatibleWeightsError

RGB_FEATURE_DIM = 768

# registry ids resolve to URLs of checkpoints in this package's own format;
# downloads happen only when such an id is explicitly configured
WEIGHT_REGISTRY: Dict[str, str] = {}

_BACKBONE_PREFIXES = ("patch_proj.", "cls_token", "pos_embed", "blocks.", "final_norm.")


@dataclass(frozen=True)
class RgbEncoderConfig:
    patch_size: int = 16
    image_size: int = 224
    embed_dim: int = 768
    depth: int = 12
    n_heads: int = 12
    mlp_ratio: int = 4
    source: str = "random"

    def __post_init__(self):
        if self.image_size % self.patch_size != 0:
            raise ConfigError(
                f"image size {self.image_size} not divisible by patch size {self.patch_size}"
            )

    @property
    def n_patches(self) -> int:
        return (self.image_size // self.patch_size) ** 2

    @classmethod
    def dinov2_b14_preset(cls, source: str = "random") -> "RgbEncoderConfig":
        # 224/14 -> 16x16 = 256 patches (257 tokens with the class token)
        return cls(patch_size=14, source=source)


class TransformerBlock(nn.Module):
    """Pre-norm block: MHSA + MLP, both with residual connections."""

    def __init__(self, dim: int, n_heads: int, mlp_ratio: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, n_heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, dim * mlp_ratio),
            nn.GELU(),
            nn.Linear(dim * mlp_ratio, dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h, h, need_weights=False)[0]
        return x + self.mlp(self.norm2(x))


class RgbEncoder(nn.Module):
    def __init__(self, config: Optional[RgbEncoderConfig] = None):
        super().__init__()
        config = config or RgbEncoderConfig()
        self.config = config
        patch_dim = 3 * config.patch_size**2
        self.patch_proj = nn.Linear(patch_dim, config.embed_dim)
        self.cls_token = nn.Parameter(torch.zeros(1, config.embed_dim))
        self.pos_embed = nn.Parameter(torch.zeros(config.n_patches + 1, config.embed_dim))
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        self.blocks = nn.ModuleList(
            TransformerBlock(config.embed_dim, config.n_heads, config.mlp_ratio)
            for _ in range(config.depth)
        )
        self.final_norm = nn.LayerNorm(config.embed_dim)

    def extract_patches(self, image: torch.Tensor) -> torch.Tensor:
        """H x W x 3 image -> n_patches x (3 p^2) flattened patches, row-major."""
        cfg = self.config
        if image.shape != (cfg.image_size, cfg.image_size, 3):
            raise ContractError(
                f"expected {cfg.image_size}x{cfg.image_size}x3 image, got {tuple(image.shape)}"
            )
        p = cfg.patch_size
        g = cfg.image_size // p
        patches = image.reshape(g, p, g, p, 3).permute(0, 2, 1, 3, 4)
        return patches.reshape(g * g, p * p * 3)

    def patchify(self, image: torch.Tensor) -> torch.Tensor:
        """Embed patches, prepend the class token, add positional encodings.

        Returns the (n_patches + 1) x embed_dim input sequence.
        """
        embedded = self.patch_proj(self.extract_patches(image))
        seq = torch.cat([self.cls_token, embedded], dim=0)
        return seq + self.pos_embed

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        x = self.patchify(image).unsqueeze(0)
        for block in self.blocks:
            x = block(x)
        return self.final_norm(x[0, 0])


def encode_rgb(encoder: RgbEncoder, image: np.ndarray) -> np.ndarray:
    """Eval-mode convenience wrapper over numpy in/out."""
    encoder.eval()
    with torch.no_grad():
        t = torch.as_tensor(np.asarray(image), dtype=next(encoder.parameters()).dtype)
        return encoder(t).cpu().numpy()


def save_encoder(encoder: RgbEncoder, path: str | Path) -> None:
    tensors = {name: p.detach().cpu().numpy() for name, p in encoder.state_dict().items()}
    manifest = {"kind": "rgb_encoder", "config": vars(encoder.config)}
    save_checkpoint(path, tensors, manifest)


def load_pretrained(
    config: RgbEncoderConfig, weight_source: Optional[str | Path] = None
) -> tuple[RgbEncoder, Dict[str, List[str]]]:
    """Build an encoder and load weights per the config's source.

    Returns (encoder, manifest) where the manifest lists loaded, missing and
    unexpected tensor names. Missing backbone tensors are an error; missing
    head/auxiliary tensors are tolerated.
    """
    source = str(weight_source) if weight_source is not None else config.source
    encoder = RgbEncoder(config)
    if source == "random":
        return encoder, {"loaded": [], "missing": [], "unexpected": []}
    path = _resolve_source(source)
    tensors, _ = load_checkpoint(path)
    state = encoder.state_dict()
    loaded, missing, unexpected = [], [], []
    for name, param in state.items():
        if name not in tensors:
            missing.append(name)
            continue
        arr = tensors[name]
        if tuple(arr.shape) != tuple(param.shape):
            raise IncompatibleWeightsError(
                f"tensor '{name}' has shape {tuple(arr.shape)}, expected {tuple(param.shape)}"
            )
        loaded.append(name)
    unexpected = [n for n in tensors if n not in state]
    bad = [n for n in missing if n.startswith(_BACKBONE_PREFIXES)]
    if bad:
        raise IncompatibleWeightsError(f"backbone weights missing from {path}: {bad[0]}")
    encoder.load_state_dict(
        {n: torch.as_tensor(tensors[n].copy()) for n in loaded}, strict=False
    )
    return encoder, {"loaded": loaded, "missing": missing, "unexpected": unexpected}


def _resolve_source(source: str) -> Path:
    path = Path(source)
    if path.exists():
        return path
    if source in WEIGHT_REGISTRY:
        return _download(source, WEIGHT_REGISTRY[source])
    raise IncompatibleWeightsError(f"unknown weight source: {source}")


def _download(registry_id: str, url: str) -> Path:  # pragma: no cover - network
    import urllib.request  # noqa: PLC0415

    cache = Path.home() / ".cache" / "vlm6d"
    cache.mkdir(parents=True, exist_ok=True)
    target = cache / f"{registry_id}.ckpt"
    if not target.exists():
        urllib.request.urlretrieve(url, target)
    return target
