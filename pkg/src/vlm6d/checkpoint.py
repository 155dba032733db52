"""Checkpoint container: a flat name -> tensor map plus a JSON manifest.

Single self-describing binary file, shared by every trainable component.
The writer is fully deterministic (sorted tensor order, canonical JSON), so
save -> load -> save produces byte-identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from .errors import IncompatibleWeightsError, IngestionError

_MAGIC = b"VLM6DCKPT\x00"


def save_checkpoint(
    path: str | Path, tensors: Dict[str, np.ndarray], manifest: Dict[str, Any] | None = None
) -> None:
    names = sorted(tensors)
    entries = []
    blobs = []
    for name in names:
        arr = np.asarray(tensors[name])
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        entries.append(
            {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape), "nbytes": arr.nbytes}
        )
        blobs.append(arr.tobytes())
    header = json.dumps(
        {"manifest": manifest or {}, "tensors": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path: str | Path) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"checkpoint not found: {path}")
    with open(path, "rb") as f:
        if f.read(len(_MAGIC)) != _MAGIC:
            raise IncompatibleWeightsError(f"not a checkpoint file: {path}")
        (header_len,) = struct.unpack("<Q", f.read(8))
        try:
            header = json.loads(f.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise IncompatibleWeightsError(f"corrupt checkpoint header in {path}: {exc}") from exc
        tensors: Dict[str, np.ndarray] = {}
        for entry in header["tensors"]:
            blob = f.read(entry["nbytes"])
            if len(blob) < entry["nbytes"]:
                raise IncompatibleWeightsError(
                    f"truncated checkpoint {path}: tensor '{entry['name']}' is incomplete"
                )
            tensors[entry["name"]] = np.frombuffer(blob, dtype=np.dtype(entry["dtype"])).reshape(
                entry["shape"]
            )
    return tensors, header["manifest"]
