"""Kernel backend selection.

The hot inner loops (farthest-point sampling, ball query, nearest-neighbor
distances, pairwise diameter) exist twice: a Cython extension
(`vlm6d._kernels_c`) and a pure-numpy fallback (`vlm6d._kernels_py`). The
compiled backend is used when importable; set VLM6D_KERNEL_BACKEND=python
or =compiled to force one. Both produce bit-identical results.
"""

import os
from types import ModuleType

from . import _kernels_py


def _load_compiled():
    from . import _kernels_c  # noqa: PLC0415

    return _kernels_c


def get_backend(name: str | None = None) -> ModuleType:
    """Return a kernel module by name: 'compiled', 'python', or None for auto."""
    if name is None:
        name = os.environ.get("VLM6D_KERNEL_BACKEND", "")
    if name == "python":
        return _kernels_py
    if name == "compiled":
        return _load_compiled()
    try:
        return _load_compiled()
    except ImportError:
        return _kernels_py


_active = get_backend()

BACKEND = "compiled" if _active.__name__.endswith("_kernels_c") else "python"

fps_greedy = _active.fps_greedy
ball_query = _active.ball_query
ball_query_nearest = _active.ball_query_nearest
nn_dists = _active.nn_dists
max_pairwise_dist = _active.max_pairwise_dist
