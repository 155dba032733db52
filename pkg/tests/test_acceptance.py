"""Acceptance suite: ten numbered criteria, one printed verdict line each.

Run with `pytest tests/test_acceptance.py -s` to see the verdict lines as
they complete (criterion 7 trains a small model and takes ~15 minutes).
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest
import torch

from vlm6d.data.bop import load_bop_sample, write_bop_scene
from vlm6d.data.manifest import LMO_OBJECT_NAMES, LMO_SYMMETRIC, DatasetManifest, ManifestEntry
from vlm6d.data.synth import SynthConfig, build_toy_registry, synth_scene, write_toy_models
from vlm6d.depth_encoder import DepthEncoder, encode_depth
from vlm6d.fusion import FusionNet, PosePrediction, pose_loss, rotation_from_6d_torch
from vlm6d.geometry import CameraIntrinsics, Pose, backproject_depth, project_points
from vlm6d.harness.config import DatasetSpec, ModelSpec, OptimizerSpec, RunConfig
from vlm6d.harness.evaluate import evaluate
from vlm6d.harness.train import train
from vlm6d.metrics import add_metric, adds_metric
from vlm6d.model import ModelConfig, PoseNet

from conftest import random_model, random_pose, random_rotation

DT = torch.float64

# criterion 7 training recipe (epochs and sample count fixed by the criterion,
# the rest are harness hyperparameters)
OVERFIT_EPOCHS = 200
OVERFIT_LR = 1e-3
OVERFIT_BATCH = 2
OVERFIT_DROPOUT = 0.0
OVERFIT_BN_FREEZE_EPOCH = 20
OVERFIT_CLIP_GRAD = 1.0
# desk-rig scene parameters: objects sit near a canonical orientation and
# each frame draws a jittered albedo, so every sample is visually distinct
OVERFIT_MAX_ROTATION_DEG = 30.0
OVERFIT_COLOR_JITTER = 0.35


def report(criterion: int, passed: bool, detail: str) -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}", flush=True)
    assert passed, detail


@pytest.fixture(scope="module")
def full_model():
    torch.manual_seed(0)
    return PoseNet(ModelConfig(n_classes=8))


def make_toy_dataset(root: Path, n_frames: int, object_ids=(1, 2, 3), seed0=1000, **synth):
    registry = build_toy_registry()
    ids = list(object_ids)
    frames = []
    for i in range(n_frames):
        cfg = SynthConfig(object_ids=(ids[i % len(ids)],), **synth)
        frames.append(synth_scene(seed0 + i, cfg, registry)[0])
    write_bop_scene(root, 0, frames)
    write_toy_models(root, registry)


def toy_config(root: Path, out: Path, **opt) -> RunConfig:
    return RunConfig(
        dataset=DatasetSpec(root=str(root), manifest=str(root / "manifest.json")),
        model=ModelSpec(dropout_rate=opt.pop("dropout_rate", 0.3)),
        optimizer=OptimizerSpec(**opt),
        seed=7,
        output_dir=str(out),
    )


def test_criterion_1_shape_contracts(full_model):
    t0 = time.time()
    rng = np.random.default_rng(0)
    image = torch.as_tensor(rng.normal(size=(224, 224, 3)), dtype=DT)
    cloud = torch.as_tensor(rng.normal(scale=0.05, size=(2048, 3)) + [0, 0, 0.8], dtype=DT)
    with torch.no_grad():
        _, bundle = full_model(image, cloud)
        states = full_model.depth_encoder.forward_with_states(cloud)
    sa_shapes = [tuple(f.shape) for _, f in states]
    ok = (
        tuple(bundle.f_rgb.shape) == (768,)
        and tuple(bundle.f_depth.shape) == (1024,)
        and tuple(bundle.f_concat.shape) == (1792,)
        and tuple(bundle.f_fused.shape) == (512,)
        and full_model.rgb_encoder.config.n_patches == 196
        and sa_shapes == [(512, 128), (128, 256), (1, 1024)]
        and time.time() - t0 < 60
    )
    report(1, ok, f"dims 768/1024/1792/512, 196 patches, SA {sa_shapes}, {time.time() - t0:.1f}s")


def test_criterion_2_metric_oracles():
    t0 = time.time()

    def add_oracle(pred, gt, model):
        total = 0.0
        for p in model.points:
            a = pred.rotation @ p + pred.translation
            b = gt.rotation @ p + gt.translation
            total += float(np.sqrt(((a - b) ** 2).sum()))
        return total / len(model.points)

    def adds_oracle(pred, gt, model):
        pred_pts = [pred.rotation @ p + pred.translation for p in model.points]
        total = 0.0
        for p in model.points:
            b = gt.rotation @ p + gt.translation
            total += min(float(np.sqrt(((a - b) ** 2).sum())) for a in pred_pts)
        return total / len(model.points)

    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(200):
        m = random_model(rng, n_points=int(rng.integers(4, 51)))
        pred, gt = random_pose(rng), random_pose(rng)
        worst = max(
            worst,
            abs(add_metric(pred, gt, m) - add_oracle(pred, gt, m)),
            abs(adds_metric(pred, gt, m) - adds_oracle(pred, gt, m)),
        )
    ok = worst < 1e-9 and time.time() - t0 < 60
    report(2, ok, f"200 triples, max |vectorized - oracle| = {worst:.2e}, {time.time() - t0:.1f}s")


def test_criterion_3_permutation_invariance():
    torch.manual_seed(2)
    encoder = DepthEncoder().to(DT)
    rng = np.random.default_rng(3)
    cloud = rng.normal(scale=0.05, size=(2048, 3)) + [0, 0, 0.8]
    base = encode_depth(encoder, cloud)
    worst = 0.0
    for _ in range(50):
        out = encode_depth(encoder, cloud[rng.permutation(2048)])
        worst = max(worst, float(np.abs(out - base).max()))
    report(3, worst < 1e-5, f"50 permutations, max feature change = {worst:.2e}")


def test_criterion_4_gradient_checks():
    rng = np.random.default_rng(4)
    eps = 1e-6
    worst = 0.0

    def run_instance(inst: int):
        nonlocal worst
        torch.manual_seed(400 + inst)
        fusion = FusionNet().to(DT)
        model = random_model(rng, n_points=12)
        gt = random_pose(rng)
        centroid = gt.translation + rng.normal(scale=0.02, size=3)
        f_rgb = torch.as_tensor(rng.normal(size=768), dtype=DT)
        f_depth = torch.as_tensor(rng.normal(size=1024), dtype=DT)
        r6 = torch.as_tensor(rng.normal(size=6), dtype=DT).requires_grad_(True)
        t_off = torch.as_tensor(rng.normal(scale=0.03, size=3), dtype=DT).requires_grad_(True)

        def loss():
            bundle = fusion(f_rgb, f_depth)
            pred = PosePrediction(
                rotation_6d=r6,
                translation_offset=t_off,
                confidence=torch.sigmoid(bundle.f_fused[:1].sum()),
                class_logits=bundle.f_fused[:4],
            )
            return pose_loss(pred, gt, model, centroid, gt_class=0)[0]

        total = loss()
        g_r6, g_t, g_w = torch.autograd.grad(total, [r6, t_off, fusion.fc1.weight])

        def fd_check(param, grad, flat):
            nonlocal worst
            idx = np.unravel_index(flat, tuple(param.shape))
            with torch.no_grad():
                original = float(param[idx])
                param[idx] = original + eps
                plus = float(loss())
                param[idx] = original - eps
                minus = float(loss())
                param[idx] = original
            fd = (plus - minus) / (2 * eps)
            denom = max(abs(fd), abs(float(grad[idx])), 1e-10)
            worst = max(worst, abs(fd - float(grad[idx])) / denom)

        for k in range(6):
            fd_check(r6, g_r6, k)
        for k in range(3):
            fd_check(t_off, g_t, k)
        for _ in range(3):
            fd_check(fusion.fc1.weight, g_w, int(rng.integers(fusion.fc1.weight.numel())))

    for inst in range(10):
        run_instance(inst)
    report(4, worst < 1e-2, f"10 instances x (6D rot, offset, fusion weight), max rel err = {worst:.2e}")


def test_criterion_5_roundtrip_geometry(tmp_path):
    rng = np.random.default_rng(5)
    worst_px = 0.0
    for _ in range(100):
        intr = CameraIntrinsics(
            fx=rng.uniform(400, 700), fy=rng.uniform(400, 700),
            cx=rng.uniform(300, 340), cy=rng.uniform(220, 260),
            width=640, height=480,
        )
        depth = rng.uniform(0.3, 2.0, size=(48, 64))
        cloud = backproject_depth(depth, intr)
        px = project_points(cloud.coords, intr)
        # every pixel is valid, so points come back in row-major pixel order
        vv, uu = np.nonzero(depth > 0)
        worst_px = max(worst_px, float(np.abs(px - np.stack([uu, vv], axis=1)).max()))

    worst_pose = 0.0
    from vlm6d.data.bop import Annotation, RGBDFrame

    intr = CameraIntrinsics(fx=572.4, fy=573.6, cx=320.0, cy=240.0, width=640, height=480)
    annotations = [
        Annotation(object_id=i + 1, pose=random_pose(rng), bbox=(10, 10, 50, 50))
        for i in range(8)
    ]
    frame = RGBDFrame(
        rgb=rng.uniform(0, 255, size=(480, 640, 3)).round(),
        depth=rng.uniform(0.4, 1.2, size=(480, 640)),
        intrinsics=intr,
        annotations=annotations,
    )
    write_bop_scene(tmp_path, 0, [frame])
    loaded = load_bop_sample(tmp_path, 0, 0)
    for a, b in zip(annotations, loaded.annotations):
        worst_pose = max(
            worst_pose,
            float(np.abs(a.pose.rotation - b.pose.rotation).max()),
            float(np.abs(a.pose.translation - b.pose.translation).max()),
        )
    ok = worst_px < 1e-4 and worst_pose < 1e-6
    report(5, ok, f"reprojection max {worst_px:.2e} px, BOP pose roundtrip max {worst_pose:.2e}")


def test_criterion_6_decoded_rotation_validity():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(1000):
        r6 = torch.as_tensor(rng.normal(size=6), dtype=DT)
        r = rotation_from_6d_torch(r6).numpy()
        worst = max(
            worst,
            float(np.abs(r.T @ r - np.eye(3)).max()),
            abs(float(np.linalg.det(r)) - 1.0),
        )
    report(6, worst < 1e-6, f"1000 decodes, max orthonormality/det deviation = {worst:.2e}")


def test_criterion_7_overfit_surrogate(tmp_path):
    t0 = time.time()
    root = tmp_path / "toy20"
    make_toy_dataset(
        root,
        20,
        max_rotation_deg=OVERFIT_MAX_ROTATION_DEG,
        color_jitter=OVERFIT_COLOR_JITTER,
    )
    config = toy_config(
        root,
        tmp_path / "run",
        learning_rate=OVERFIT_LR,
        epochs=OVERFIT_EPOCHS,
        batch_size=OVERFIT_BATCH,
        checkpoint_every_epochs=10_000,
        freeze_batchnorm_after_epochs=OVERFIT_BN_FREEZE_EPOCH,
        clip_grad_norm=OVERFIT_CLIP_GRAD,
        dropout_rate=OVERFIT_DROPOUT,
    )
    ckpt = train(config)
    records = [
        json.loads(line)
        for line in (Path(config.output_dir) / "metrics.jsonl").read_text().splitlines()
    ]
    first = float(np.mean([r["pose"] for r in records[:5]]))
    last = float(np.mean([r["pose"] for r in records[-5:]]))
    ratio = first / last
    report_eval = evaluate(config, checkpoint=ckpt)
    recall = report_eval.mean_recall
    wall = time.time() - t0
    ok = recall is not None and recall >= 95.0 and ratio >= 10.0 and wall < 1800
    report(
        7,
        ok,
        f"training-set ADD(-S) recall {recall:.1f}% (>=95), "
        f"L_pose {first:.4f}->{last:.4f} ({ratio:.1f}x, >=10x), wall {wall / 60:.1f} min (<30)",
    )


def test_criterion_8_threshold_boundary(tmp_path):
    # asymmetric objects only: a pure-translation offset equals ADD exactly
    root = tmp_path / "toy"
    make_toy_dataset(root, 4, object_ids=(1, 3), seed0=3000)
    config = toy_config(root, tmp_path / "run", epochs=1)
    from vlm6d.harness.train import load_samples

    _, _, models = load_samples(config, include_gt=True)

    oracle = evaluate(config, predictor=lambda s: s.inputs.gt_pose)

    def offset(sample):
        gt = sample.inputs.gt_pose
        d = models[sample.inputs.object_id].diameter
        return Pose(gt.rotation, gt.translation + [0.0, 0.0, 0.1 * d + 1e-6])

    shifted = evaluate(config, predictor=offset)
    oracle_rows = [o.recall for o in oracle.objects if o.n_samples]
    shifted_rows = [o.recall for o in shifted.objects if o.n_samples]
    ok = all(r == 100.0 for r in oracle_rows) and all(r == 0.0 for r in shifted_rows)
    report(8, ok, f"oracle rows {oracle_rows} == 100.0, offset(0.1d+1e-6) rows {shifted_rows} == 0.0")


def test_criterion_9_determinism(tmp_path, full_model):
    root = tmp_path / "toy"
    make_toy_dataset(root, 4, seed0=4000)
    logs = []
    for name in ("a", "b"):
        config = toy_config(root, tmp_path / name, epochs=2, batch_size=2,
                            learning_rate=1e-3, checkpoint_every_epochs=100)
        train(config)
        logs.append((tmp_path / name / "metrics.jsonl").read_bytes())
    rng = np.random.default_rng(9)
    image = torch.as_tensor(rng.normal(size=(224, 224, 3)), dtype=DT)
    cloud = torch.as_tensor(rng.normal(scale=0.05, size=(2048, 3)) + [0, 0, 0.8], dtype=DT)
    full_model.eval()
    with torch.no_grad():
        outs = [full_model(image, cloud)[1].f_fused.numpy() for _ in range(3)]
    forwards_equal = all(np.array_equal(o, outs[0]) for o in outs[1:])
    ok = logs[0] == logs[1] and forwards_equal
    report(9, ok, f"seeded-run logs identical: {logs[0] == logs[1]}, eval forwards bitwise equal: {forwards_equal}")


def test_criterion_10_table_fidelity(tmp_path):
    root = tmp_path / "lmo"
    (root / "models").mkdir(parents=True)
    rng = np.random.default_rng(10)
    entries = []
    for i, name in enumerate(LMO_OBJECT_NAMES):
        oid = i + 1
        rel = f"models/obj_{oid:06d}.xyz"
        np.savetxt(root / rel, rng.uniform(-30, 30, size=(60, 3)))
        entries.append(ManifestEntry(object_id=oid, name=name, model_path=rel,
                                     symmetric=name in LMO_SYMMETRIC))
    DatasetManifest(objects=entries, root=root).save(root / "manifest.json")

    from vlm6d.data.bop import Annotation, RGBDFrame

    intr = CameraIntrinsics(fx=572.4, fy=573.6, cx=320.0, cy=240.0, width=640, height=480)
    frames = []
    for _ in range(2):
        annotations = []
        for i in range(8):
            t = np.array([rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0.7])
            u = intr.fx * t[0] / t[2] + intr.cx
            v = intr.fy * t[1] / t[2] + intr.cy
            annotations.append(Annotation(object_id=i + 1, pose=Pose(random_rotation(rng), t),
                                          bbox=(int(u) - 40, int(v) - 40, 80, 80)))
        frames.append(RGBDFrame(rgb=rng.uniform(0, 255, size=(480, 640, 3)).round(),
                                depth=np.full((480, 640), 0.7), intrinsics=intr,
                                annotations=annotations))
    write_bop_scene(root, 0, frames)
    config = RunConfig(dataset=DatasetSpec(root=str(root), manifest=str(root / "manifest.json")),
                       output_dir=str(root / "run"))

    from vlm6d.harness.train import load_samples

    _, _, models = load_samples(config, include_gt=True)

    def noisy(sample):
        gt = sample.inputs.gt_pose
        d = models[sample.inputs.object_id].diameter
        return Pose(gt.rotation, gt.translation + rng.normal(scale=0.05 * d, size=3))

    rep = evaluate(config, predictor=noisy)
    names = [o.name for o in rep.objects]
    rows = [o.recall for o in rep.objects if o.recall is not None]
    ok = names == LMO_OBJECT_NAMES and len(rows) == 8 and rep.mean_recall == float(np.mean(rows))
    report(10, ok, f"rows {names}, mean {rep.mean_recall} == arithmetic mean {float(np.mean(rows))}")
