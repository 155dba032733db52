"""BOP-layout dataset ingestion and the matching writer.

On-disk layout per scene directory `<root>/<scene:06d>/`:
    scene_camera.json   per-frame intrinsics and depth scale
    scene_gt.json       per-frame object poses (R row-major, t in mm)
    scene_gt_info.json  per-frame bboxes and visibility fractions
    rgb/<frame:06d>.png
    depth/<frame:06d>.png   16-bit; meters = value * depth_scale / 1000
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import cv2
import numpy as np

from ..errors import IngestionError
from ..geometry import CameraIntrinsics, Pose

DEFAULT_DEPTH_SCALE = 0.1  # tenths of a millimeter per depth unit


@dataclass(frozen=True)
class Annotation:
    object_id: int
    pose: Pose
    bbox: Tuple[int, int, int, int]  # x, y, w, h in pixels
    visibility: float = 1.0


@dataclass(frozen=True)
class RGBDFrame:
    rgb: np.ndarray  # H x W x 3, values in [0, 255]
    depth: np.ndarray  # H x W, meters; zeros mark invalid pixels
    intrinsics: CameraIntrinsics
    annotations: List[Annotation]


def _read_json(path: Path, context: str) -> dict:
    if not path.exists():
        raise IngestionError(f"missing file: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise IngestionError(f"malformed JSON in {path} ({context}): {exc}") from exc


def load_bop_sample(dataset_root: str | Path, scene: int, frame: int) -> RGBDFrame:
    """Load one frame of one scene from a BOP-layout dataset."""
    scene_dir = Path(dataset_root) / f"{scene:06d}"
    context = f"scene {scene} frame {frame}"
    cameras = _read_json(scene_dir / "scene_camera.json", context)
    gts = _read_json(scene_dir / "scene_gt.json", context)
    infos = _read_json(scene_dir / "scene_gt_info.json", context)
    key = str(frame)
    if key not in cameras:
        raise IngestionError(f"frame {frame} not in {scene_dir / 'scene_camera.json'}")
    cam = cameras[key]
    depth_scale = float(cam.get("depth_scale", DEFAULT_DEPTH_SCALE))

    rgb_path = scene_dir / "rgb" / f"{frame:06d}.png"
    depth_path = scene_dir / "depth" / f"{frame:06d}.png"
    rgb_bgr = cv2.imread(str(rgb_path), cv2.IMREAD_COLOR)
    if rgb_bgr is None:
        raise IngestionError(f"missing file: {rgb_path}")
    rgb = cv2.cvtColor(rgb_bgr, cv2.COLOR_BGR2RGB)
    depth_raw = cv2.imread(str(depth_path), cv2.IMREAD_UNCHANGED)
    if depth_raw is None:
        raise IngestionError(f"missing file: {depth_path}")
    depth = depth_raw.astype(np.float64) * depth_scale / 1000.0

    h, w = depth.shape
    intrinsics = CameraIntrinsics.from_matrix(np.array(cam["cam_K"]), width=w, height=h)

    annotations = []
    for gt, info in zip(gts.get(key, []), infos.get(key, [])):
        pose = Pose(
            rotation=np.array(gt["cam_R_m2c"], dtype=np.float64).reshape(3, 3),
            translation=np.array(gt["cam_t_m2c"], dtype=np.float64) / 1000.0,
        )
        annotations.append(
            Annotation(
                object_id=int(gt["obj_id"]),
                pose=pose,
                bbox=tuple(int(v) for v in info["bbox_obj"]),
                visibility=float(info.get("visib_fract", 1.0)),
            )
        )
    return RGBDFrame(rgb=rgb.astype(np.float64), depth=depth, intrinsics=intrinsics, annotations=annotations)


def write_bop_scene(
    dataset_root: str | Path,
    scene: int,
    frames: Sequence[RGBDFrame],
    depth_scale: float = DEFAULT_DEPTH_SCALE,
) -> Path:
    """Write frames in the BOP layout; inverse of load_bop_sample."""
    scene_dir = Path(dataset_root) / f"{scene:06d}"
    (scene_dir / "rgb").mkdir(parents=True, exist_ok=True)
    (scene_dir / "depth").mkdir(parents=True, exist_ok=True)
    cameras, gts, infos = {}, {}, {}
    for i, frame in enumerate(frames):
        cameras[str(i)] = {
            "cam_K": frame.intrinsics.matrix.flatten().tolist(),
            "depth_scale": depth_scale,
        }
        gts[str(i)] = [
            {
                "cam_R_m2c": ann.pose.rotation.flatten().tolist(),
                "cam_t_m2c": (ann.pose.translation * 1000.0).tolist(),
                "obj_id": ann.object_id,
            }
            for ann in frame.annotations
        ]
        infos[str(i)] = [
            {"bbox_obj": list(ann.bbox), "visib_fract": ann.visibility}
            for ann in frame.annotations
        ]
        rgb = np.clip(np.round(frame.rgb), 0, 255).astype(np.uint8)
        cv2.imwrite(str(scene_dir / "rgb" / f"{i:06d}.png"), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
        depth_units = np.round(frame.depth * 1000.0 / depth_scale)
        depth_png = np.clip(depth_units, 0, np.iinfo(np.uint16).max).astype(np.uint16)
        cv2.imwrite(str(scene_dir / "depth" / f"{i:06d}.png"), depth_png)
    (scene_dir / "scene_camera.json").write_text(json.dumps(cameras, indent=2))
    (scene_dir / "scene_gt.json").write_text(json.dumps(gts, indent=2))
    (scene_dir / "scene_gt_info.json").write_text(json.dumps(infos, indent=2))
    return scene_dir


def list_frames(dataset_root: str | Path, scene: int) -> List[int]:
    scene_dir = Path(dataset_root) / f"{scene:06d}"
    cameras = _read_json(scene_dir / "scene_camera.json", f"scene {scene}")
    return sorted(int(k) for k in cameras)


def list_scenes(dataset_root: str | Path) -> List[int]:
    root = Path(dataset_root)
    if not root.exists():
        raise IngestionError(f"dataset root not found: {root}")
    return sorted(int(p.name) for p in root.iterdir() if p.is_dir() and p.name.isdigit())
