"""Dataset builder: deterministic, parallel HR/LR/prompt generation.

The manifest is UTF-8 JSON Lines: line 1 a header object
{format_version, config, tool_version, backend}, then one record per line,
sorted by id. Every record is a pure function of
(global_seed, record_index, config, source image bytes), so builds are
byte-identical across worker counts and runs.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__, kernels
from .degradation import DegradationConfig, apply, record_to_spec, sample_spec, spec_to_record
from .image import encode_png, from_uint8, load_image_u8, to_uint8
from .prompts import PromptFormat, bins_from_spec, render
from .seeding import derive_record_rng, derive_record_seed

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
_SOURCE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


@dataclass(frozen=True)
class BuilderConfig:
    hr_source_dir: str
    output_dir: str
    record_count: int
    global_seed: int
    hr_patch: int = 256
    degradation: DegradationConfig = field(default_factory=DegradationConfig)
    prompt_format: PromptFormat = field(default_factory=PromptFormat)
    worker_count: int = 1
    strict: bool = True

    def __post_init__(self) -> None:
        if self.record_count < 1:
            raise ValueError(f"record_count must be >= 1, got {self.record_count}")
        if self.hr_patch % self.degradation.scale_factor:
            raise ValueError(
                f"hr_patch {self.hr_patch} not divisible by scale factor "
                f"{self.degradation.scale_factor}"
            )
        if self.worker_count < 1:
            raise ValueError(f"worker_count must be >= 1, got {self.worker_count}")

    def identity_dict(self) -> dict[str, Any]:
        """Config as stored in the manifest header.

        worker_count, output_dir and strict are execution details, not part
        of the dataset identity, and are deliberately excluded so builds at
        different worker counts compare byte-identical.
        """
        return {
            "hr_source_dir": str(self.hr_source_dir),
            "record_count": self.record_count,
            "global_seed": self.global_seed,
            "hr_patch": self.hr_patch,
            "degradation": self.degradation.to_dict(),
            "prompt_format": self.prompt_format.to_dict(),
        }

    @classmethod
    def from_identity_dict(cls, d: dict[str, Any], output_dir: str) -> "BuilderConfig":
        return cls(
            hr_source_dir=d["hr_source_dir"],
            output_dir=output_dir,
            record_count=d["record_count"],
            global_seed=d["global_seed"],
            hr_patch=d["hr_patch"],
            degradation=DegradationConfig.from_dict(d["degradation"]),
            prompt_format=PromptFormat.from_dict(d["prompt_format"]),
        )


def list_sources(hr_source_dir: str | Path, hr_patch: int, strict: bool = True) -> list[Path]:
    """Lexicographically sorted, validated source image list.

    Undecodable or undersized files abort in strict mode; otherwise they are
    logged and excluded up front, keeping record indexing deterministic.
    """
    root = Path(hr_source_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"HR source directory not found: {root}")
    candidates = sorted(
        (p for p in root.iterdir() if p.suffix.lower() in _SOURCE_SUFFIXES),
        key=lambda p: p.name,
    )
    usable = []
    for path in candidates:
        try:
            img = load_image_u8(path)
        except Exception as exc:
            if strict:
                raise RuntimeError(f"unreadable source image {path}: {exc}") from exc
            log.warning("skipping unreadable source %s: %s", path, exc)
            continue
        if img.shape[0] < hr_patch or img.shape[1] < hr_patch:
            if strict:
                raise RuntimeError(
                    f"source image {path} is {img.shape[1]}x{img.shape[0]}, "
                    f"smaller than hr_patch {hr_patch}"
                )
            log.warning("skipping undersized source %s", path)
            continue
        usable.append(path)
    if not usable:
        raise RuntimeError(f"no usable source images in {root}")
    return usable


@functools.lru_cache(maxsize=16)
def _cached_source(path_str: str) -> np.ndarray:
    return load_image_u8(path_str)


def synthesize_record(
    index: int,
    config: BuilderConfig,
    sources: list[Path],
) -> tuple[dict[str, Any], bytes, bytes]:
    """Derive one record fully in memory: (manifest record, hr png, lr png).

    The per-record stream is consumed in a fixed order: source choice, crop
    offsets, spec sampling, pipeline noise, prompt dropout/shuffle.
    """
    rng = derive_record_rng(config.global_seed, index)
    src_path = sources[int(rng.integers(len(sources)))]
    src = _cached_source(str(src_path))
    oy = int(rng.integers(src.shape[0] - config.hr_patch + 1))
    ox = int(rng.integers(src.shape[1] - config.hr_patch + 1))
    hr_u8 = src[oy : oy + config.hr_patch, ox : ox + config.hr_patch]

    spec = sample_spec(config.degradation, rng)
    lr = apply(spec, from_uint8(hr_u8), rng, config=config.degradation)
    bins = bins_from_spec(spec, config.degradation)
    prompt = render(bins, config.prompt_format, rng)

    hr_png = encode_png(hr_u8)
    lr_png = encode_png(to_uint8(lr))
    rec = {
        "id": f"{index:08d}",
        "hr_path": f"hr/{index:08d}.png",
        "lr_path": f"lr/{index:08d}.png",
        "prompt": prompt,
        "bins": bins.to_dict(),
        "spec": spec_to_record(spec),
        "record_index": index,
        "derived_seed": derive_record_seed(config.global_seed, index),
        "hr_checksum": hashlib.sha256(hr_png).hexdigest(),
        "lr_checksum": hashlib.sha256(lr_png).hexdigest(),
    }
    return rec, hr_png, lr_png


def _build_worker(args: tuple[list[int], dict, str, list[str]]) -> list[dict[str, Any]]:
    indices, config_identity, output_dir, source_names = args
    config = BuilderConfig.from_identity_dict(config_identity, output_dir)
    sources = [Path(s) for s in source_names]
    out = Path(output_dir)
    records = []
    for index in indices:
        rec, hr_png, lr_png = synthesize_record(index, config, sources)
        (out / rec["hr_path"]).write_bytes(hr_png)
        (out / rec["lr_path"]).write_bytes(lr_png)
        records.append(rec)
    return records


def build(config: BuilderConfig) -> Path:
    """Generate the dataset and return the manifest path."""
    out = Path(config.output_dir)
    (out / "hr").mkdir(parents=True, exist_ok=True)
    (out / "lr").mkdir(parents=True, exist_ok=True)
    sources = list_sources(config.hr_source_dir, config.hr_patch, config.strict)
    source_names = [str(p) for p in sources]

    indices = list(range(config.record_count))
    if config.worker_count == 1:
        records = _build_worker((indices, config.identity_dict(), str(out), source_names))
    else:
        chunks = [indices[i :: config.worker_count] for i in range(config.worker_count)]
        chunks = [c for c in chunks if c]
        args = [(c, config.identity_dict(), str(out), source_names) for c in chunks]
        records = []
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            for part in pool.map(_build_worker, args):
                records.extend(part)
    records.sort(key=lambda r: r["record_index"])

    manifest = out / "manifest.jsonl"
    header = {
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "backend": kernels.backend_name(),
        "config": config.identity_dict(),
    }
    with manifest.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return manifest


def read_manifest(path: str | Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    """Return (header, records); malformed lines raise with their line number."""
    path = Path(path)
    header: dict[str, Any] | None = None
    records: list[dict[str, Any]] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            if lineno == 1:
                if "format_version" not in obj:
                    raise ValueError(f"{path}:1: missing manifest header")
                header = obj
            else:
                if "id" not in obj:
                    raise ValueError(f"{path}:{lineno}: record missing 'id'")
                records.append(obj)
    if header is None:
        raise ValueError(f"{path}: empty manifest (no header line)")
    return header, records


def _hist(values: Iterable[float], lo: float, hi: float, nbins: int = 10) -> list[int]:
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        return [0] * nbins
    if hi <= lo:
        return [int(vals.size)] + [0] * (nbins - 1)
    counts, _ = np.histogram(vals, bins=nbins, range=(lo, hi))
    return counts.tolist()


def stats(manifest_path: str | Path) -> dict[str, Any]:
    """Distribution report: bin/kind frequencies, parameter histograms,
    prompt length distribution."""
    header, records = read_manifest(manifest_path)
    cfg = DegradationConfig.from_dict(header["config"]["degradation"])
    n = len(records)

    report: dict[str, Any] = {"record_count": n}
    bin_counts: dict[str, dict[str, int]] = {
        "blur": {}, "resize1": {}, "noise": {}, "compression": {}, "resize2": {}
    }
    kind_counts: dict[str, dict[str, int]] = {"blur_kind": {}, "noise_kind": {}, "gray_noise": {}}
    specs = [record_to_spec(r["spec"]) for r in records]
    for rec, spec in zip(records, specs):
        for comp in ("blur", "resize1", "noise", "compression"):
            label = rec["bins"][comp]
            bin_counts[comp][label] = bin_counts[comp].get(label, 0) + 1
        label = "present" if rec["bins"]["resize2"] else "absent"
        bin_counts["resize2"][label] = bin_counts["resize2"].get(label, 0) + 1
        for name, value in (
            ("blur_kind", spec.blur_kind),
            ("noise_kind", spec.noise_kind),
            ("gray_noise", str(spec.gray_noise).lower()),
        ):
            kind_counts[name][value] = kind_counts[name].get(value, 0) + 1
    report["bin_frequencies"] = bin_counts
    report["kind_frequencies"] = kind_counts
    report["method_frequencies"] = {
        "resize1": _count_values(s.resize1_method for s in specs),
        "resize2": _count_values(s.resize2_method for s in specs),
    }

    gauss = [s.noise_level for s in specs if s.noise_kind == "gaussian"]
    poiss = [s.noise_level for s in specs if s.noise_kind == "poisson"]
    aniso_theta = [s.theta for s in specs if s.blur_kind == "aniso"]
    report["parameter_histograms"] = {
        "sigma_x": _hist((s.sigma_x for s in specs), *cfg.sigma_range),
        "sigma_y": _hist((s.sigma_y for s in specs), *cfg.sigma_range),
        "theta": _hist(aniso_theta, *cfg.theta_range),
        "gamma1": _hist((s.gamma1 for s in specs), *cfg.gamma1_range),
        "phi1": _hist(gauss, *cfg.phi1_range),
        "phi2": _hist(poiss, *cfg.phi2_range),
        "jpeg_q": _hist((s.jpeg_q for s in specs), *cfg.q_range),
        "eta": _count_values(str(s.eta) for s in specs),
    }
    lengths = [len(r["prompt"]) for r in records]
    report["prompt_length"] = {
        "min": min(lengths) if lengths else 0,
        "max": max(lengths) if lengths else 0,
        "mean": float(np.mean(lengths)) if lengths else 0.0,
        "descriptor_counts": _count_values(
            str(len([p for p in r["prompt"].split(",") if p.strip()])) for r in records
        ),
    }
    return report


def _count_values(values: Iterable[str]) -> dict[str, int]:
    out: dict[str, int] = {}
    for v in values:
        out[v] = out.get(v, 0) + 1
    return dict(sorted(out.items()))


def format_stats_table(report: dict[str, Any]) -> str:
    """Aligned-text rendering of a stats report."""
    lines = [f"records: {report['record_count']}"]
    n = max(report["record_count"], 1)

    def section(title: str, counts: dict[str, dict[str, int]]) -> None:
        lines.append(title)
        for name, vals in counts.items():
            for label, count in sorted(vals.items()):
                lines.append(f"  {name:<12} {label:<12} {count:>8}  {count / n:7.4f}")

    section("bin frequencies:", report["bin_frequencies"])
    section("kind frequencies:", report["kind_frequencies"])
    section("method frequencies:", report["method_frequencies"])
    lines.append("parameter histograms (10 bins over configured range):")
    for name, hist in report["parameter_histograms"].items():
        if isinstance(hist, dict):
            body = " ".join(f"{k}:{v}" for k, v in hist.items())
        else:
            body = " ".join(f"{v}" for v in hist)
        lines.append(f"  {name:<12} {body}")
    pl = report["prompt_length"]
    lines.append(
        f"prompt length: min {pl['min']} max {pl['max']} mean {pl['mean']:.1f}"
    )
    return "\n".join(lines)


def verify(manifest_path: str | Path, mode: str = "checksum") -> dict[str, Any]:
    """Check a build against its manifest.

    checksum mode re-hashes the stored files; regenerate mode re-derives each
    record from (global_seed, record_index) and compares bytes and derived
    fields. Missing files are reported, not fatal.
    """
    if mode not in ("checksum", "regenerate"):
        raise ValueError(f"mode must be 'checksum' or 'regenerate', got {mode!r}")
    manifest_path = Path(manifest_path)
    header, records = read_manifest(manifest_path)
    root = manifest_path.parent
    mismatched: list[str] = []
    missing: list[str] = []
    detail: dict[str, list[str]] = {}

    if mode == "regenerate":
        config = BuilderConfig.from_identity_dict(header["config"], str(root))
        sources = list_sources(config.hr_source_dir, config.hr_patch, strict=True)

    for rec in records:
        problems: list[str] = []
        paths = {"hr": root / rec["hr_path"], "lr": root / rec["lr_path"]}
        stored: dict[str, bytes | None] = {}
        for kind, p in paths.items():
            if not p.is_file():
                missing.append(rec["id"])
                stored[kind] = None
            else:
                stored[kind] = p.read_bytes()

        if mode == "checksum":
            for kind in ("hr", "lr"):
                data = stored[kind]
                if data is not None and hashlib.sha256(data).hexdigest() != rec[f"{kind}_checksum"]:
                    problems.append(f"{kind} checksum mismatch")
        else:
            regen, hr_png, lr_png = synthesize_record(rec["record_index"], config, sources)
            for kind, data in (("hr", hr_png), ("lr", lr_png)):
                if hashlib.sha256(data).hexdigest() != rec[f"{kind}_checksum"]:
                    problems.append(f"{kind} checksum not reproducible")
                if stored[kind] is not None and stored[kind] != data:
                    problems.append(f"{kind} file bytes differ from regeneration")
            for fld in ("prompt", "bins", "spec", "derived_seed"):
                if regen[fld] != rec[fld]:
                    problems.append(f"{fld} mismatch")
        if problems:
            mismatched.append(rec["id"])
            detail[rec["id"]] = problems

    return {
        "mode": mode,
        "checked": len(records),
        "mismatched": mismatched,
        "missing": sorted(set(missing)),
        "detail": detail,
    }
