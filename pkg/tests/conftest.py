import numpy as np
import pytest

from vlm6d.geometry import CameraIntrinsics, ObjectModel, Pose


@pytest.fixture
def intrinsics():
    return CameraIntrinsics(fx=572.4, fy=573.6, cx=320.0, cy=240.0, width=640, height=480)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
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


def random_pose(rng: np.random.Generator, t_scale: float = 0.5) -> Pose:
    return Pose(random_rotation(rng), rng.normal(scale=t_scale, size=3) + [0, 0, 1.0])


def random_model(rng: np.random.Generator, n_points: int = 30, object_id: int = 1,
                 symmetric: bool = False) -> ObjectModel:
    pts = rng.normal(scale=0.05, size=(n_points, 3))
    from vlm6d.metrics import object_diameter

    return ObjectModel(object_id=object_id, points=pts, diameter=object_diameter(pts),
                       symmetric=symmetric)
