"""Procedural toy RGB-D scenes with exact ground-truth poses.

Three primitive objects (box, cylinder, L-bracket) are placed at random
poses in front of a pinhole camera. Depth is rendered by z-buffering the
densely sampled surface points splatted into pixels; RGB is a flat
per-object color with Lambert shading from a random directional light.
Everything is a deterministic function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from ..geometry import CameraIntrinsics, ObjectModel, Pose, apply_pose, project_points
from ..metrics import object_diameter
from ..pointcloud import farthest_point_sample
from .bop import Annotation, RGBDFrame
from .manifest import DatasetManifest, ManifestEntry

TOY_BOX_ID = 1
TOY_CYLINDER_ID = 2
TOY_BRACKET_ID = 3

_COLORS = {
    TOY_BOX_ID: np.array([0.85, 0.30, 0.25]),
    TOY_CYLINDER_ID: np.array([0.25, 0.60, 0.85]),
    TOY_BRACKET_ID: np.array([0.35, 0.80, 0.35]),
}

_NAMES = {TOY_BOX_ID: "box", TOY_CYLINDER_ID: "cylinder", TOY_BRACKET_ID: "bracket"}

# only the cylinder has a pose ambiguity (continuous axial symmetry)
_SYMMETRIC = {TOY_BOX_ID: False, TOY_CYLINDER_ID: True, TOY_BRACKET_ID: False}

_SURFACE_STEP = 0.0012  # meters between adjacent surface samples


@dataclass(frozen=True)
class SynthConfig:
    width: int = 640
    height: int = 480
    fx: float = 572.4
    fy: float = 573.6
    cx: float = 320.0
    cy: float = 240.0
    object_ids: Tuple[int, ...] = (TOY_BOX_ID, TOY_CYLINDER_ID, TOY_BRACKET_ID)
    z_range: Tuple[float, float] = (0.4, 1.2)
    # upper bound on each object's orientation angle away from its canonical
    # resting pose, in degrees; None samples uniformly over all rotations
    max_rotation_deg: float | None = None
    # per-frame uniform jitter added to each object's base color (clipped to
    # [0, 1]); 0 renders every frame with the same flat albedo
    color_jitter: float = 0.0
    pixel_margin: int = 140
    ambient: float = 0.35
    background: float = 60.0  # gray level of empty pixels

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(self.fx, self.fy, self.cx, self.cy, self.width, self.height)


@dataclass(frozen=True)
class RenderModel:
    """Dense surface samples for rendering plus the metric point model."""

    model: ObjectModel
    surface_points: np.ndarray  # S x 3, model frame
    surface_normals: np.ndarray  # S x 3, unit, outward
    color: np.ndarray  # base RGB in [0, 1]


def _box_surface(size: Tuple[float, float, float], step: float, center=(0.0, 0.0, 0.0)):
    sx, sy, sz = size
    cx, cy, cz = center
    pts, nrm = [], []
    for axis, half in ((0, sx / 2), (1, sy / 2), (2, sz / 2)):
        other = [i for i in range(3) if i != axis]
        dims = [sx, sy, sz]
        u = np.linspace(-dims[other[0]] / 2, dims[other[0]] / 2, max(2, int(dims[other[0]] / step)))
        v = np.linspace(-dims[other[1]] / 2, dims[other[1]] / 2, max(2, int(dims[other[1]] / step)))
        uu, vv = np.meshgrid(u, v, indexing="ij")
        for sign in (-1.0, 1.0):
            face = np.zeros((uu.size, 3))
            face[:, axis] = sign * half
            face[:, other[0]] = uu.ravel()
            face[:, other[1]] = vv.ravel()
            normal = np.zeros((uu.size, 3))
            normal[:, axis] = sign
            pts.append(face)
            nrm.append(normal)
    pts = np.concatenate(pts) + np.array([cx, cy, cz])
    return pts, np.concatenate(nrm)


def _cylinder_surface(radius: float, height: float, step: float):
    n_theta = max(8, int(2 * np.pi * radius / step))
    n_h = max(2, int(height / step))
    theta = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    z = np.linspace(-height / 2, height / 2, n_h)
    tt, zz = np.meshgrid(theta, z, indexing="ij")
    side = np.stack(
        [radius * np.cos(tt).ravel(), radius * np.sin(tt).ravel(), zz.ravel()], axis=1
    )
    side_n = np.stack([np.cos(tt).ravel(), np.sin(tt).ravel(), np.zeros(tt.size)], axis=1)
    pts, nrm = [side], [side_n]
    # caps: polar grids at both ends
    radii = np.linspace(0, radius, max(2, int(radius / step)))
    rr, tt = np.meshgrid(radii, theta, indexing="ij")
    disk = np.stack([rr.ravel() * np.cos(tt.ravel()), rr.ravel() * np.sin(tt.ravel())], axis=1)
    for sign in (-1.0, 1.0):
        cap = np.concatenate([disk, np.full((disk.shape[0], 1), sign * height / 2)], axis=1)
        cap_n = np.tile([0.0, 0.0, sign], (disk.shape[0], 1))
        pts.append(cap)
        nrm.append(cap_n)
    return np.concatenate(pts), np.concatenate(nrm)


def _bracket_surface(step: float):
    # two orthogonal arms forming an L
    p1, n1 = _box_surface((0.10, 0.03, 0.03), step, center=(0.0, 0.0, 0.0))
    p2, n2 = _box_surface((0.03, 0.03, 0.07), step, center=(-0.035, 0.0, 0.05))
    return np.concatenate([p1, p2]), np.concatenate([n1, n2])


@lru_cache(maxsize=2)
def build_toy_registry(step: float = _SURFACE_STEP) -> Dict[int, RenderModel]:
    """Deterministic primitive models keyed by object id."""
    surfaces = {
        TOY_BOX_ID: _box_surface((0.08, 0.06, 0.10), step),
        TOY_CYLINDER_ID: _cylinder_surface(0.035, 0.12, step),
        TOY_BRACKET_ID: _bracket_surface(step),
    }
    registry = {}
    for oid, (pts, nrm) in surfaces.items():
        diameter = object_diameter(pts)
        metric_pts = pts[farthest_point_sample(pts, min(1000, pts.shape[0]))]
        registry[oid] = RenderModel(
            model=ObjectModel(
                object_id=oid,
                points=metric_pts,
                diameter=diameter,
                symmetric=_SYMMETRIC[oid],
                name=_NAMES[oid],
            ),
            surface_points=pts,
            surface_normals=nrm / np.linalg.norm(nrm, axis=1, keepdims=True),
            color=_COLORS[oid],
        )
    return registry


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _bounded_rotation(rng: np.random.Generator, max_deg: float) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = np.radians(max_deg) * rng.uniform()
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def synth_scene(
    seed: int,
    config: SynthConfig | None = None,
    registry: Dict[int, RenderModel] | None = None,
) -> Tuple[RGBDFrame, Dict[int, RenderModel]]:
    """Render one toy frame with ground-truth poses and tight bboxes."""
    config = config or SynthConfig()
    registry = registry or build_toy_registry()
    rng = np.random.default_rng(seed)
    intr = config.intrinsics

    light = rng.normal(size=3)
    light[2] = -abs(light[2]) - 0.5  # light always in front of the scene
    light /= np.linalg.norm(light)

    placements = []
    for oid in config.object_ids:
        if config.max_rotation_deg is None:
            rot = _random_rotation(rng)
        else:
            rot = _bounded_rotation(rng, config.max_rotation_deg)
        z = rng.uniform(*config.z_range)
        u = rng.uniform(config.pixel_margin, config.width - config.pixel_margin)
        v = rng.uniform(config.pixel_margin, config.height - config.pixel_margin)
        t = np.array([(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z])
        color = registry[oid].color
        if config.color_jitter > 0.0:
            jitter = rng.uniform(-config.color_jitter, config.color_jitter, size=3)
            color = np.clip(color + jitter, 0.0, 1.0)
        placements.append((oid, Pose(rot, t), color))

    h, w = config.height, config.width
    zbuf = np.full(h * w, np.inf)
    rgb = np.full((h * w, 3), config.background)
    owner = np.full(h * w, -1, dtype=np.int64)

    entries = []  # (pixel index, z, shade, object id) per splat
    splat_offsets = [(du, dv) for du in (-1, 0, 1) for dv in (-1, 0, 1)]
    per_object_pixels = {}
    for oid, pose, color in placements:
        rm = registry[oid]
        cam_pts = apply_pose(pose, rm.surface_points)
        cam_nrm = rm.surface_normals @ pose.rotation.T
        uv = project_points(cam_pts, intr)
        lambert = config.ambient + (1 - config.ambient) * np.clip(-(cam_nrm @ light), 0, None)
        shade = np.clip(color[None, :] * lambert[:, None] * 255.0, 0, 255)
        px = np.round(uv).astype(np.int64)
        per_object_pixels[oid] = (px, cam_pts[:, 2])
        for du, dv in splat_offsets:
            u_i = px[:, 0] + du
            v_i = px[:, 1] + dv
            ok = (u_i >= 0) & (u_i < w) & (v_i >= 0) & (v_i < h)
            entries.append(
                (
                    v_i[ok] * w + u_i[ok],
                    cam_pts[ok, 2],
                    shade[ok],
                    np.full(int(ok.sum()), oid, dtype=np.int64),
                )
            )

    idx = np.concatenate([e[0] for e in entries])
    zs = np.concatenate([e[1] for e in entries])
    shades = np.concatenate([e[2] for e in entries])
    oids = np.concatenate([e[3] for e in entries])
    # write far-to-near so the nearest splat at each pixel wins
    order = np.argsort(-zs, kind="stable")
    zbuf[idx[order]] = zs[order]
    rgb[idx[order]] = shades[order]
    owner[idx[order]] = oids[order]

    depth = np.where(np.isfinite(zbuf), zbuf, 0.0).reshape(h, w)
    rgb_img = rgb.reshape(h, w, 3)

    annotations = []
    for oid, pose, _ in placements:
        px, z = per_object_pixels[oid]
        u_c = np.clip(px[:, 0], 0, w - 1)
        v_c = np.clip(px[:, 1], 0, h - 1)
        x0, x1 = int(u_c.min()), int(u_c.max())
        y0, y1 = int(v_c.min()), int(v_c.max())
        flat = v_c * w + u_c
        visible = np.abs(zbuf[flat] - z) < 0.005
        annotations.append(
            Annotation(
                object_id=oid,
                pose=pose,
                bbox=(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
                visibility=float(visible.mean()),
            )
        )
    frame = RGBDFrame(rgb=rgb_img, depth=depth, intrinsics=intr, annotations=annotations)
    return frame, registry


def write_toy_models(directory: str | Path, registry: Dict[int, RenderModel] | None = None) -> DatasetManifest:
    """Write metric point models (mm, xyz text) and a dataset manifest."""
    registry = registry or build_toy_registry()
    directory = Path(directory)
    (directory / "models").mkdir(parents=True, exist_ok=True)
    entries: List[ManifestEntry] = []
    for oid, rm in sorted(registry.items()):
        rel = f"models/obj_{oid:06d}.xyz"
        np.savetxt(directory / rel, rm.model.points * 1000.0, fmt="%.6f")
        entries.append(
            ManifestEntry(
                object_id=oid, name=rm.model.name, model_path=rel, symmetric=rm.model.symmetric
            )
        )
    manifest = DatasetManifest(objects=entries, root=directory)
    manifest.save(directory / "manifest.json")
    return manifest
