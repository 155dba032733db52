"""Deterministic desk-scale training loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch

from ..data.bop import list_frames, list_scenes, load_bop_sample
from ..data.manifest import DatasetManifest
from ..data.preprocess import ModelInput, preprocess
from ..errors import ConfigError, DegenerateSampleError, Vlm6dError
from ..fusion import pose_loss
from ..geometry import ObjectModel
from ..model import ModelConfig, PoseNet, load_model, save_model
from ..rgb_encoder import RgbEncoderConfig
from .config import RunConfig

log = logging.getLogger(__name__)


class TrainingDiverged(Vlm6dError):
    """Loss became non-finite; the last good checkpoint is retained."""


@dataclass
class Sample:
    scene: int
    frame: int
    annotation: int
    inputs: ModelInput
    class_index: int


def sample_seed(run_seed: int, scene: int, frame: int, annotation: int) -> int:
    return int(np.random.SeedSequence([run_seed, scene, frame, annotation]).generate_state(1)[0])


def load_samples(config: RunConfig, include_gt: bool = True) -> Tuple[List[Sample], DatasetManifest, Dict[int, ObjectModel]]:
    manifest = DatasetManifest.load(config.dataset.manifest)
    models = manifest.load_models()
    class_index = manifest.class_index
    root = config.dataset.resolved_root()
    scenes = config.dataset.scenes or list_scenes(root)
    samples: List[Sample] = []
    for scene in scenes:
        for frame_id in list_frames(root, scene):
            frame = load_bop_sample(root, scene, frame_id)
            for ann_idx, ann in enumerate(frame.annotations):
                if ann.object_id not in class_index:
                    continue
                try:
                    inputs = preprocess(
                        frame,
                        ann_idx,
                        seed=sample_seed(config.seed, scene, frame_id, ann_idx),
                        include_gt=include_gt,
                    )
                except DegenerateSampleError as exc:
                    log.warning("skipping scene %d frame %d ann %d: %s", scene, frame_id, ann_idx, exc)
                    continue
                samples.append(
                    Sample(scene, frame_id, ann_idx, inputs, class_index[ann.object_id])
                )
    return samples, manifest, models


def build_model(config: RunConfig, n_classes: int) -> PoseNet:
    torch.manual_seed(config.seed)
    model_config = ModelConfig(
        n_classes=n_classes,
        rgb=RgbEncoderConfig(
            patch_size=config.model.rgb_patch_size, source=config.model.rgb_source
        ),
        freeze_rgb=config.model.freeze_rgb,
        dropout_rate=config.model.dropout_rate,
        dtype=config.model.dtype,
    )
    return PoseNet(model_config)


def _cache_rgb_features(model: PoseNet, samples: List[Sample]) -> Dict[int, torch.Tensor]:
    dtype = model.config.torch_dtype()
    model.rgb_encoder.eval()
    cache = {}
    with torch.no_grad():
        for i, sample in enumerate(samples):
            cache[i] = model.rgb_encoder(torch.as_tensor(sample.inputs.image, dtype=dtype))
    return cache


def _cosine_lr(base: float, step: int, total: int) -> float:
    if total <= 1:
        return base
    return base * 0.5 * (1.0 + math.cos(math.pi * step / (total - 1)))


def _flatten_optimizer_state(optimizer: torch.optim.Optimizer) -> Dict[str, np.ndarray]:
    out = {}
    for idx, state in optimizer.state_dict()["state"].items():
        for key, value in state.items():
            arr = value.detach().cpu().numpy() if torch.is_tensor(value) else np.asarray(value)
            out[f"optim.{idx}.{key}"] = arr
    return out


def _restore_optimizer_state(
    optimizer: torch.optim.Optimizer, tensors: Dict[str, np.ndarray]
) -> None:
    state: Dict[int, Dict[str, torch.Tensor]] = {}
    for name, arr in tensors.items():
        if not name.startswith("optim."):
            continue
        _, idx, key = name.split(".", 2)
        state.setdefault(int(idx), {})[key] = torch.as_tensor(arr.copy())
    if state:
        sd = optimizer.state_dict()
        sd["state"] = state
        optimizer.load_state_dict(sd)


def train(config: RunConfig, resume: Optional[str | Path] = None) -> Path:
    """Train per the config; returns the final checkpoint path.

    Fully deterministic for a fixed config and machine: sample order,
    dropout masks and the optimizer schedule all derive from the run seed
    and step counters, so interrupted runs resume bit-for-bit.
    """
    config.validate()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True))

    samples, manifest, models = load_samples(config, include_gt=True)
    if not samples:
        raise ConfigError("no usable training samples found")
    n_classes = config.model.n_classes or len(manifest.objects)

    start_epoch = 0
    global_step = 0
    if resume is not None:
        model, extra, ckpt_manifest = load_model(resume)
        start_epoch = int(ckpt_manifest["epoch"])
        global_step = int(ckpt_manifest["global_step"])
    else:
        model = build_model(config, n_classes)
        extra = {}

    opt = config.optimizer
    if opt.algorithm != "adamw":
        raise ConfigError(f"unsupported optimizer '{opt.algorithm}'")
    optimizer = torch.optim.AdamW(
        model.trainable_parameters(), lr=opt.learning_rate, weight_decay=opt.weight_decay
    )
    if extra:
        _restore_optimizer_state(optimizer, extra)

    rgb_cache = _cache_rgb_features(model, samples) if config.model.freeze_rgb else None
    batches_per_epoch = math.ceil(len(samples) / opt.batch_size)
    total_steps = opt.epochs * batches_per_epoch

    dtype = model.config.torch_dtype()
    metrics_path = out_dir / "metrics.jsonl"
    metrics_file = open(metrics_path, "a" if resume is not None else "w")
    final_path = out_dir / "checkpoint_final.ckpt"
    last_good = Path(resume) if resume is not None else None

    def save(path: Path, epoch: int) -> None:
        save_model(
            model,
            path,
            extra_tensors=_flatten_optimizer_state(optimizer),
            extra_manifest={"epoch": epoch, "global_step": global_step,
                            "run_config": config.to_dict()},
        )

    try:
        for epoch in range(start_epoch, opt.epochs):
            order = np.random.default_rng([config.seed, epoch]).permutation(len(samples))
            model.train()
            if opt.freeze_batchnorm_after_epochs and epoch >= opt.freeze_batchnorm_after_epochs:
                for module in model.modules():
                    if isinstance(module, torch.nn.modules.batchnorm._BatchNorm):
                        module.eval()
            for b in range(batches_per_epoch):
                if opt.cosine_decay:
                    lr = _cosine_lr(opt.learning_rate, global_step, total_steps)
                    for group in optimizer.param_groups:
                        group["lr"] = lr
                else:
                    lr = opt.learning_rate
                batch = order[b * opt.batch_size : (b + 1) * opt.batch_size]
                optimizer.zero_grad()
                totals = {"total": 0.0, "pose": 0.0, "cls": 0.0, "conf": 0.0}
                loss_acc = None
                for j, sample_idx in enumerate(batch):
                    sample = samples[sample_idx]
                    dropout_seed = int(
                        np.random.SeedSequence([config.seed, epoch, b, j]).generate_state(1)[0]
                    )
                    f_rgb = rgb_cache[int(sample_idx)] if rgb_cache is not None else None
                    pred, _ = model(
                        torch.as_tensor(sample.inputs.image, dtype=dtype),
                        torch.as_tensor(sample.inputs.cloud, dtype=dtype),
                        training=True,
                        dropout_seed=dropout_seed,
                        f_rgb=f_rgb,
                    )
                    total, comps = pose_loss(
                        pred,
                        sample.inputs.gt_pose,
                        models[sample.inputs.object_id],
                        sample.inputs.cloud_centroid,
                        sample.class_index,
                        lambda_cls=config.loss.lambda_cls,
                        lambda_conf=config.loss.lambda_conf,
                        tau=config.loss.tau,
                    )
                    loss_acc = total if loss_acc is None else loss_acc + total
                    totals["total"] += float(total.detach())
                    totals["pose"] += float(comps["pose"].detach())
                    totals["cls"] += float(comps["cls"].detach())
                    totals["conf"] += float(comps["conf"].detach())
                loss = loss_acc / len(batch)
                if not torch.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch} step {global_step}; "
                        f"last good checkpoint: {last_good}"
                    )
                loss.backward()
                if opt.clip_grad_norm > 0:
                    torch.nn.utils.clip_grad_norm_(
                        model.trainable_parameters(), opt.clip_grad_norm
                    )
                optimizer.step()
                global_step += 1
                record = {
                    "epoch": epoch,
                    "step": global_step,
                    "lr": lr,
                    **{k: v / len(batch) for k, v in totals.items()},
                }
                metrics_file.write(json.dumps(record) + "\n")
            metrics_file.flush()
            if (epoch + 1) % opt.checkpoint_every_epochs == 0 and epoch + 1 < opt.epochs:
                periodic = out_dir / f"checkpoint_epoch{epoch + 1:05d}.ckpt"
                save(periodic, epoch + 1)
                last_good = periodic
        save(final_path, opt.epochs)
    finally:
        metrics_file.close()
    return final_path
