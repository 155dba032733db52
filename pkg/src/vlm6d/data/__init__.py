from .bop import Annotation, RGBDFrame, load_bop_sample, write_bop_scene
from .manifest import DatasetManifest, ManifestEntry
from .preprocess import ModelInput, preprocess
from .synth import SynthConfig, build_toy_registry, synth_scene

__all__ = [
    "Annotation",
    "RGBDFrame",
    "load_bop_sample",
    "write_bop_scene",
    "DatasetManifest",
    "ManifestEntry",
    "ModelInput",
    "preprocess",
    "SynthConfig",
    "build_toy_registry",
    "synth_scene",
]
