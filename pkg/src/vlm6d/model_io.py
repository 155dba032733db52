"""Object point-model loading.

Supports PLY (ASCII and binary little-endian, BOP convention: x/y/z vertex
properties in millimeters) and a plain whitespace-separated `x y z` text
format. Coordinates are converted to meters on load.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import IngestionError
from .geometry import ObjectModel
from .metrics import object_diameter

MM_TO_M = 1e-3

# fixed seed for the metric-model subsample, for run-to-run determinism
MODEL_SUBSAMPLE_SEED = 0
MODEL_MAX_POINTS = 1000

_PLY_DTYPES = {
    "float": ("f", 4), "float32": ("f", 4),
    "double": ("d", 8), "float64": ("d", 8),
    "char": ("b", 1), "int8": ("b", 1),
    "uchar": ("B", 1), "uint8": ("B", 1),
    "short": ("h", 2), "int16": ("h", 2),
    "ushort": ("H", 2), "uint16": ("H", 2),
    "int": ("i", 4), "int32": ("i", 4),
    "uint": ("I", 4), "uint32": ("I", 4),
}


def load_ply_points(path: str | Path) -> np.ndarray:
    """Vertex x/y/z from a PLY file, converted mm -> m."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"model file not found: {path}")
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"ply":
            raise IngestionError(f"not a PLY file: {path}")
        fmt = None
        n_vertices = None
        properties = []  # (name, dtype) of the vertex element
        in_vertex_element = False
        while True:
            line = f.readline()
            if not line:
                raise IngestionError(f"unterminated PLY header: {path}")
            tokens = line.decode("ascii", errors="replace").split()
            if not tokens:
                continue
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                in_vertex_element = tokens[1] == "vertex"
                if in_vertex_element:
                    n_vertices = int(tokens[2])
            elif tokens[0] == "property" and in_vertex_element:
                if tokens[1] == "list":
                    raise IngestionError(f"list property in vertex element: {path}")
                properties.append((tokens[2], tokens[1]))
            elif tokens[0] == "end_header":
                break
        if fmt is None or n_vertices is None:
            raise IngestionError(f"malformed PLY header: {path}")
        names = [name for name, _ in properties]
        for axis in ("x", "y", "z"):
            if axis not in names:
                raise IngestionError(f"PLY vertex element lacks property '{axis}': {path}")
        if fmt == "ascii":
            pts = _read_ply_ascii(f, n_vertices, names)
        elif fmt == "binary_little_endian":
            pts = _read_ply_binary(f, n_vertices, properties, path)
        else:
            raise IngestionError(f"unsupported PLY format '{fmt}': {path}")
    return pts * MM_TO_M


def _read_ply_ascii(f, n_vertices, names) -> np.ndarray:
    ix, iy, iz = names.index("x"), names.index("y"), names.index("z")
    pts = np.empty((n_vertices, 3), dtype=np.float64)
    for i in range(n_vertices):
        tokens = f.readline().split()
        if len(tokens) < len(names):
            raise IngestionError(f"truncated PLY vertex row {i}")
        pts[i] = (float(tokens[ix]), float(tokens[iy]), float(tokens[iz]))
    return pts


def _read_ply_binary(f, n_vertices, properties, path) -> np.ndarray:
    fmt_codes = []
    for name, dtype in properties:
        if dtype not in _PLY_DTYPES:
            raise IngestionError(f"unsupported PLY property type '{dtype}': {path}")
        fmt_codes.append(_PLY_DTYPES[dtype][0])
    row = struct.Struct("<" + "".join(fmt_codes))
    names = [name for name, _ in properties]
    ix, iy, iz = names.index("x"), names.index("y"), names.index("z")
    data = f.read(row.size * n_vertices)
    if len(data) < row.size * n_vertices:
        raise IngestionError(f"truncated PLY vertex data: {path}")
    pts = np.empty((n_vertices, 3), dtype=np.float64)
    for i, values in enumerate(row.iter_unpack(data)):
        pts[i] = (values[ix], values[iy], values[iz])
    return pts


def load_xyz_points(path: str | Path) -> np.ndarray:
    """Whitespace-separated `x y z` rows in millimeters, converted to meters."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"model file not found: {path}")
    try:
        pts = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise IngestionError(f"malformed xyz text file {path}: {exc}") from exc
    if pts.shape[1] != 3:
        raise IngestionError(f"expected 3 columns in {path}, got {pts.shape[1]}")
    return pts * MM_TO_M


def load_model_points(path: str | Path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".ply":
        return load_ply_points(path)
    return load_xyz_points(path)


def load_object_model(
    path: str | Path,
    object_id: int,
    symmetric: bool = False,
    name: str = "",
    max_points: int = MODEL_MAX_POINTS,
) -> ObjectModel:
    """Load a point model and prepare it for metric computation.

    The diameter is computed on the full point set; the stored points are
    subsampled to `max_points` by deterministic farthest-point sampling.
    """
    from .pointcloud import farthest_point_sample  # noqa: PLC0415

    pts = load_model_points(path)
    diameter = object_diameter(pts)
    if pts.shape[0] > max_points:
        pts = pts[farthest_point_sample(pts, max_points)]
    return ObjectModel(
        object_id=object_id, points=pts, diameter=diameter, symmetric=symmetric, name=name
    )
