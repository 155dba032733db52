"""Run configuration: declarative JSON with environment-variable overrides.

A config file has top-level sections (dataset, model, optimizer, loss, run).
Any scalar can be overridden via VLM6D_<SECTION>_<KEY>, e.g.
VLM6D_OPTIMIZER_LEARNING_RATE=1e-3; values parse as JSON, falling back to
plain strings.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from ..errors import ConfigError

ENV_PREFIX = "VLM6D_"


@dataclass
class DatasetSpec:
    root: str = ""
    manifest: str = ""
    split: str = ""  # optional subdirectory under root
    scenes: Optional[list[int]] = None  # None = all

    def resolved_root(self) -> Path:
        return Path(self.root) / self.split if self.split else Path(self.root)


@dataclass
class ModelSpec:
    n_classes: int = 0  # 0 = infer from the manifest
    rgb_source: str = "random"
    rgb_patch_size: int = 16
    freeze_rgb: bool = True
    dropout_rate: float = 0.3
    dtype: str = "float64"


@dataclass
class OptimizerSpec:
    algorithm: str = "adamw"
    learning_rate: float = 1e-4
    weight_decay: float = 1e-4
    epochs: int = 1
    batch_size: int = 8
    cosine_decay: bool = True
    checkpoint_every_epochs: int = 50
    grad_accumulation: int = 1
    # after this many epochs, batch-norm layers stop updating and use their
    # running statistics, so training optimizes the same function that
    # evaluation runs; 0 disables the freeze
    freeze_batchnorm_after_epochs: int = 0
    # clip the global gradient norm to this value each step; 0 disables
    clip_grad_norm: float = 0.0


@dataclass
class LossSpec:
    lambda_cls: float = 0.1
    lambda_conf: float = 0.1
    tau: float = 0.05


@dataclass
class RunConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    loss: LossSpec = field(default_factory=LossSpec)
    seed: int = 0
    output_dir: str = "runs/default"

    def validate(self) -> "RunConfig":
        if self.optimizer.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.optimizer.epochs}")
        if self.optimizer.learning_rate <= 0:
            raise ConfigError(f"learning rate must be > 0, got {self.optimizer.learning_rate}")
        if self.optimizer.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.optimizer.batch_size}")
        if self.model.dtype not in ("float32", "float64"):
            raise ConfigError(f"unsupported dtype {self.model.dtype}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_SECTIONS = {
    "dataset": DatasetSpec,
    "model": ModelSpec,
    "optimizer": OptimizerSpec,
    "loss": LossSpec,
}


def _apply_env_overrides(raw: Dict[str, Any], environ: Dict[str, str]) -> None:
    for key, value in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        rest = key[len(ENV_PREFIX) :].lower()
        section, _, option = rest.partition("_")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        if section in _SECTIONS and option:
            raw.setdefault(section, {})[option] = parsed
        elif section in ("seed", "output") or not option:
            # top-level scalars: VLM6D_SEED, VLM6D_OUTPUT_DIR
            raw[rest] = parsed


def config_from_dict(raw: Dict[str, Any]) -> RunConfig:
    kwargs: Dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section '{name}' must be an object")
        unknown = set(section) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown keys in section '{name}': {sorted(unknown)}")
        try:
            kwargs[name] = cls(**section)
        except TypeError as exc:
            raise ConfigError(f"bad section '{name}': {exc}") from exc
    kwargs["seed"] = int(raw.get("seed", 0))
    kwargs["output_dir"] = str(raw.get("output_dir", "runs/default"))
    return RunConfig(**kwargs).validate()


def load_run_config(path: str | Path, environ: Optional[Dict[str, str]] = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    _apply_env_overrides(raw, os.environ if environ is None else environ)
    return config_from_dict(raw)
