"""Command-line surface over the degradation pipeline.

Subcommands: generate, degrade, describe, estimate, calibrate, stats, verify.
Payload goes to stdout, diagnostics to stderr; exit codes are 0 (success),
1 (operational error), 2 (usage error).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import BuilderConfig, build, format_stats_table, stats, verify
from .degradation import DegradationConfig, apply, record_to_spec
from .estimator import Calibration, calibrate, estimate_prompt
from .image import from_uint8, load_image_u8, to_uint8, write_png
from .prompts import PromptFormat, bins_from_spec, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="promptdeg", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    # All generate flags default to None so a --config file can fill them in;
    # explicitly passed flags win.
    gen = sub.add_parser("generate", help="build an HR/LR/prompt dataset")
    gen.add_argument("--config", type=Path, help="JSON file of defaults; explicit flags win")
    gen.add_argument("--hr-dir", dest="hr_dir", help="directory of HR source images")
    gen.add_argument("--out", help="output dataset directory")
    gen.add_argument("--count", type=int, help="number of records")
    gen.add_argument("--seed", type=int, help="global seed (default 0)")
    gen.add_argument("--hr-patch", dest="hr_patch", type=int, help="HR patch size (default 256)")
    gen.add_argument("--scale", type=int, help="LR scale factor (default 4)")
    gen.add_argument("--shuffle-order", dest="shuffle_order", action="store_true", default=None,
                     help="randomize the degradation stage order per record")
    gen.add_argument("--prompt-dropout", dest="prompt_dropout", type=float,
                     help="per-descriptor omission probability (default 0)")
    gen.add_argument("--shuffle-prompt", dest="shuffle_prompt", action="store_true", default=None,
                     help="randomize descriptor order in prompts")
    gen.add_argument("--one-resize", dest="one_resize", action="store_true", default=None,
                     help="disable the first resize (gamma1 fixed at 1)")
    gen.add_argument("--workers", type=int, help="parallel workers (default 1)")
    gen.add_argument("--lenient", action="store_true", default=None,
                     help="skip unusable source images instead of aborting")

    deg = sub.add_parser("degrade", help="apply a degradation spec to one image")
    deg.add_argument("--image", required=True, type=Path)
    deg.add_argument("--spec", required=True, help="spec record: JSON file path or inline JSON")
    deg.add_argument("--seed", type=int, default=0)
    deg.add_argument("--scale", type=int, default=4)
    deg.add_argument("--out", required=True, type=Path)

    des = sub.add_parser("describe", help="render the prompt for a degradation spec")
    des.add_argument("--spec", required=True, help="spec record: JSON file path or inline JSON")

    est = sub.add_parser("estimate", help="estimate a prompt from a degraded image")
    est.add_argument("--image", required=True, type=Path)
    est.add_argument("--calibration", required=True, type=Path)

    cal = sub.add_parser("calibrate", help="fit estimator cut points from labeled manifests")
    cal.add_argument("--manifest", action="append", required=True, type=Path,
                     help="single-degradation-dominant manifest (repeatable)")
    cal.add_argument("--out", required=True, type=Path)
    cal.add_argument("--min-per-class", dest="min_per_class", type=int, default=100)

    sta = sub.add_parser("stats", help="distribution report for a manifest")
    sta.add_argument("--manifest", required=True, type=Path)
    sta.add_argument("--json", action="store_true", help="emit the raw JSON report")

    ver = sub.add_parser("verify", help="check a build against its manifest")
    ver.add_argument("--manifest", required=True, type=Path)
    ver.add_argument("--mode", choices=("checksum", "regenerate"), default="checksum")
    return parser


def _load_spec_arg(text: str):
    stripped = text.strip()
    if stripped.startswith("{"):
        return record_to_spec(json.loads(stripped))
    return record_to_spec(json.loads(Path(text).read_text(encoding="utf-8")))


def _cmd_generate(args: argparse.Namespace) -> int:
    file_cfg = {}
    if args.config:
        file_cfg = json.loads(args.config.read_text(encoding="utf-8"))

    def pick(flag_value, key, fallback=None):
        # Explicit flags win over the config file; the file wins over defaults.
        if flag_value is not None:
            return flag_value
        return file_cfg.get(key, fallback)

    hr_dir = pick(args.hr_dir, "hr_dir")
    out = pick(args.out, "out")
    count = pick(args.count, "count")
    if not hr_dir or not out or not count:
        print("generate requires --hr-dir, --out and --count (flags or config file)",
              file=sys.stderr)
        return 2

    deg_overrides = dict(file_cfg.get("degradation", {}))
    deg_overrides["scale_factor"] = pick(args.scale, "scale", 4)
    if pick(args.shuffle_order, "shuffle_order", False):
        deg_overrides["order_mode"] = "shuffled"
    if pick(args.one_resize, "one_resize", False):
        deg_overrides["two_stage_resize"] = False
    config = BuilderConfig(
        hr_source_dir=str(hr_dir),
        output_dir=str(out),
        record_count=int(count),
        global_seed=int(pick(args.seed, "seed", 0)),
        hr_patch=int(pick(args.hr_patch, "hr_patch", 256)),
        degradation=DegradationConfig.from_dict(deg_overrides),
        prompt_format=PromptFormat(
            order="shuffled" if pick(args.shuffle_prompt, "shuffle_prompt", False) else "fixed",
            dropout=float(pick(args.prompt_dropout, "prompt_dropout", 0.0)),
        ),
        worker_count=int(pick(args.workers, "workers", 1)),
        strict=not pick(args.lenient, "lenient", False),
    )
    manifest = build(config)
    print(manifest)
    print(f"records: {config.record_count}")
    return 0


def _cmd_degrade(args: argparse.Namespace) -> int:
    spec = _load_spec_arg(args.spec)
    config = DegradationConfig(scale_factor=args.scale)
    hr = from_uint8(load_image_u8(args.image))
    rng = np.random.default_rng(args.seed)
    lr = apply(spec, hr, rng, config=config)
    write_png(args.out, to_uint8(lr))
    print(args.out)
    return 0


def _cmd_describe(args: argparse.Namespace) -> int:
    spec = _load_spec_arg(args.spec)
    print(render(bins_from_spec(spec, DegradationConfig())))
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    calibration = Calibration.load(args.calibration)
    img = from_uint8(load_image_u8(args.image))
    print(estimate_prompt(img, calibration))
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    calibration = calibrate(args.manifest, min_per_class=args.min_per_class)
    calibration.save(args.out)
    for comp, meta in calibration.metadata.get("components", {}).items():
        print(f"{comp}: held-out accuracy {meta['held_out_accuracy']:.3f} "
              f"(n={meta['held_out_n']})", file=sys.stderr)
    print(args.out)
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    report = stats(args.manifest)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_stats_table(report))
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    report = verify(args.manifest, mode=args.mode)
    n_bad = len(report["mismatched"])
    print(f"checked: {report['checked']}")
    print(f"{n_bad} mismatches")
    if report["missing"]:
        print(f"missing files for ids: {', '.join(report['missing'])}")
    for rec_id in report["mismatched"]:
        print(f"  {rec_id}: {'; '.join(report['detail'][rec_id])}", file=sys.stderr)
    return 0 if n_bad == 0 and not report["missing"] else 1


_COMMANDS = {
    "generate": _cmd_generate,
    "degrade": _cmd_degrade,
    "describe": _cmd_describe,
    "estimate": _cmd_estimate,
    "calibrate": _cmd_calibrate,
    "stats": _cmd_stats,
    "verify": _cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
