"""Command-line surface: train / evaluate / infer / synth.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..errors import (
    ConfigError,
    ContractError,
    DegenerateSampleError,
    EmptyCloudError,
    IncompatibleWeightsError,
    IngestionError,
)
from .config import load_run_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_CONFIG_ERRORS = (ConfigError, ContractError)
_DATA_ERRORS = (IngestionError, DegenerateSampleError, EmptyCloudError, IncompatibleWeightsError)


def _cmd_train(args) -> int:
    from .train import TrainingDiverged, train  # noqa: PLC0415

    config = load_run_config(args.config)
    try:
        path = train(config, resume=args.resume)
    except TrainingDiverged as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"final checkpoint: {path}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    from .evaluate import evaluate  # noqa: PLC0415

    config = load_run_config(args.config)
    report = evaluate(config, checkpoint=args.checkpoint)
    print(report.format_table())
    if args.json:
        Path(args.json).write_text(report.to_json())
        print(f"wrote {args.json}")
    return EXIT_OK


def _cmd_infer(args) -> int:
    from ..data.bop import load_bop_sample  # noqa: PLC0415
    from .infer import infer  # noqa: PLC0415

    scene_dir = Path(args.scene)
    frame = load_bop_sample(scene_dir.parent, int(scene_dir.name), args.frame)
    pred, pose = infer(args.checkpoint, frame, args.annotation)
    result = {
        "rotation": pose.rotation.tolist(),
        "translation": pose.translation.tolist(),
        "confidence": float(pred.confidence),
        "class_index": int(np.argmax(pred.class_logits.detach().numpy())),
    }
    print(json.dumps(result, indent=2))
    return EXIT_OK


def _cmd_synth(args) -> int:
    from ..data.bop import write_bop_scene  # noqa: PLC0415
    from ..data.synth import (  # noqa: PLC0415
        SynthConfig,
        build_toy_registry,
        synth_scene,
        write_toy_models,
    )

    registry = build_toy_registry()
    config = SynthConfig(
        max_rotation_deg=args.max_rotation_deg, color_jitter=args.color_jitter
    )
    frames = [
        synth_scene(args.seed + i, config, registry)[0] for i in range(args.frames)
    ]
    out = Path(args.out)
    write_bop_scene(out, args.scene, frames)
    write_toy_models(out, registry)
    print(f"wrote {args.frames} frames to {out / f'{args.scene:06d}'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlm6d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="per-object ADD(-S) recall table")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--json", default=None, help="also write a machine-readable report")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("infer", help="single-annotation pose inference")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scene", required=True, help="scene directory (BOP layout)")
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--annotation", type=int, default=0)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("synth", help="generate a toy BOP-layout dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--scene", type=int, default=0)
    p.add_argument(
        "--max-rotation-deg", type=float, default=None,
        help="bound object orientations this close to the canonical resting "
             "pose (default: uniform over all rotations)",
    )
    p.add_argument(
        "--color-jitter", type=float, default=0.0,
        help="per-frame uniform jitter added to each object's base color",
    )
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
