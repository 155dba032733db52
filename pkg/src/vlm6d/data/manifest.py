"""Dataset manifest: object ids, model paths, symmetry flags, class names.

JSON file format:
    {
      "objects": [
        {"object_id": 1, "name": "ape", "model_path": "models/obj_000001.ply",
         "symmetric": false},
        ...
      ]
    }
Model paths are resolved relative to the manifest file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

from ..errors import IngestionError
from ..geometry import ObjectModel
from ..model_io import load_object_model

LMO_OBJECT_NAMES = ["ape", "can", "cat", "driller", "duck", "eggbox", "glue", "holepuncher"]
LMO_SYMMETRIC = {"eggbox", "glue"}


@dataclass(frozen=True)
class ManifestEntry:
    object_id: int
    name: str
    model_path: str
    symmetric: bool = False


@dataclass
class DatasetManifest:
    objects: List[ManifestEntry]
    root: Path = field(default_factory=Path)

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        if not path.exists():
            raise IngestionError(f"manifest not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise IngestionError(f"malformed manifest {path}: {exc}") from exc
        objects = [ManifestEntry(**entry) for entry in raw["objects"]]
        return cls(objects=objects, root=path.parent)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        raw = {"objects": [vars(e) for e in self.objects]}
        path.write_text(json.dumps(raw, indent=2))

    @property
    def class_index(self) -> Dict[int, int]:
        """object_id -> contiguous class index, in manifest order."""
        return {e.object_id: i for i, e in enumerate(self.objects)}

    @property
    def names(self) -> Dict[int, str]:
        return {e.object_id: e.name for e in self.objects}

    def load_models(self) -> Dict[int, ObjectModel]:
        return {
            e.object_id: load_object_model(
                self.root / e.model_path, e.object_id, symmetric=e.symmetric, name=e.name
            )
            for e in self.objects
        }
