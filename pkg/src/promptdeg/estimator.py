"""Classical-feature substitute for image-side prompt generation.

Estimates degradation bins directly from a degraded image: Laplacian-residual
noise level, variance-of-Laplacian blur score, and 8x8 boundary-gradient
blockiness, thresholded by a calibration learned from pipeline-labeled data.
An external-command hook preserves the seam for plugging in a real
vision-language prompter.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy.ndimage as ndi
from scipy.signal import convolve2d

from .dataset import read_manifest
from .degradation import DegradationConfig
from .image import ensure_image, from_uint8, load_image_u8, luma
from .prompts import Direction, Level, PromptBins, PromptFormat, parse, render

COMPONENTS = ("noise", "blur", "compression")

_LEVELS = (Level.LIGHT, Level.MEDIUM, Level.HEAVY)

# Second-difference operator whose response to unit-variance white noise has
# unit variance after the 1/6 normalization below.
_NOISE_OPERATOR = np.array([[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]])
_NOISE_NORM = 1.0 / math.sqrt(float((_NOISE_OPERATOR**2).sum()))  # 1/6
_MEDIAN_TO_STD = 0.6745  # median(|N(0,1)|)

_LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


class CalibrationError(RuntimeError):
    """Calibration data is missing, unbalanced, or not separable."""


class HookError(RuntimeError):
    """External prompter command failed or produced an invalid prompt."""


def _check_dims(img: np.ndarray) -> np.ndarray:
    img = ensure_image(img)
    if img.shape[0] < 16 or img.shape[1] < 16:
        raise ValueError(f"feature estimation needs dims >= 16, got {img.shape[:2]}")
    return img


def estimate_noise_sigma(image: np.ndarray) -> float:
    """Robust noise std estimate in [0, 1] units (Laplacian-residual median)."""
    y = luma(_check_dims(image))
    resp = convolve2d(y, _NOISE_OPERATOR, mode="valid")
    return float(np.median(np.abs(resp)) / _MEDIAN_TO_STD * _NOISE_NORM)


def estimate_blur_metric(image: np.ndarray) -> float:
    """Blur score: negative log variance of the median-prefiltered Laplacian.

    Larger means blurrier; the median prefilter suppresses impulsive noise.
    """
    y = luma(_check_dims(image))
    med = ndi.median_filter(y, size=3)
    lap = convolve2d(med, _LAPLACIAN, mode="valid")
    return float(-math.log(float(np.var(lap)) + 1e-12))


def estimate_blockiness(image: np.ndarray) -> float:
    """Excess gradient energy on the 8x8 block grid; ~1 when artifact-free."""
    y = luma(_check_dims(image))
    gh = np.abs(np.diff(y, axis=1))  # gap g sits between columns g and g+1
    gv = np.abs(np.diff(y, axis=0))
    h_on = (np.arange(gh.shape[1]) + 1) % 8 == 0
    v_on = (np.arange(gv.shape[0]) + 1) % 8 == 0
    boundary = float(gh[:, h_on].sum() + gv[v_on, :].sum())
    n_boundary = gh[:, h_on].size + gv[v_on, :].size
    elsewhere = float(gh[:, ~h_on].sum() + gv[~v_on, :].sum())
    n_elsewhere = gh[:, ~h_on].size + gv[~v_on, :].size
    if n_boundary == 0 or n_elsewhere == 0:
        return 1.0
    denom = elsewhere / n_elsewhere
    if denom == 0.0:
        return 1.0
    return (boundary / n_boundary) / denom


FEATURE_FUNCS = {
    "noise": estimate_noise_sigma,
    "blur": estimate_blur_metric,
    "compression": estimate_blockiness,
}


@dataclass(frozen=True)
class Calibration:
    """Per-component feature cut points plus provenance metadata."""

    cuts: dict[str, tuple[float, float]]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for comp in COMPONENTS:
            if comp not in self.cuts:
                raise CalibrationError(f"calibration missing component {comp!r}")
            lo, hi = self.cuts[comp]
            if not lo < hi:
                raise CalibrationError(
                    f"cut points for {comp} must be strictly increasing, got ({lo}, {hi})"
                )

    def level_for(self, component: str, feature: float) -> Level:
        lo, hi = self.cuts[component]
        if feature < lo:
            return Level.LIGHT
        if feature < hi:
            return Level.MEDIUM
        return Level.HEAVY

    def to_json(self) -> str:
        return json.dumps(
            {"cuts": {k: list(v) for k, v in self.cuts.items()}, "metadata": self.metadata},
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Calibration":
        d = json.loads(text)
        return cls(
            cuts={k: (float(v[0]), float(v[1])) for k, v in d["cuts"].items()},
            metadata=d.get("metadata", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Calibration":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def single_degradation_config(component: str) -> DegradationConfig:
    """Config whose records vary only the given component.

    The varied parameter keeps its default range (so labels are the default
    thirds) while the other stages are pinned benign; scale_factor is 1 so
    the features see the degradation at full resolution. Used to build
    calibration and evaluation sets.
    """
    benign = dict(
        blur_kind_prob=(1.0, 0.0),
        eta_choices=(7,),
        sigma_range=(0.2, 0.21),
        two_stage_resize=False,
        noise_kind_prob=(1.0, 0.0),
        phi1_range=(0.01, 0.02),
        gray_noise_prob=1.0,
        q_range=(94.0, 95.0),
        scale_factor=1,
    )
    if component == "noise":
        benign.update(phi1_range=(1.0, 30.0))
    elif component == "blur":
        benign.update(eta_choices=(21,), sigma_range=(0.2, 3.0))
    elif component == "compression":
        benign.update(q_range=(30.0, 95.0))
    else:
        raise ValueError(f"component must be one of {COMPONENTS}, got {component!r}")
    return DegradationConfig(**benign)


def dominant_component(config: DegradationConfig) -> str:
    """Which component a single-degradation config varies."""
    wide = {
        "noise": config.phi1_range[1] - config.phi1_range[0] > 1.0,
        "blur": config.sigma_range[1] - config.sigma_range[0] > 0.5,
        "compression": config.q_range[1] - config.q_range[0] > 10.0,
    }
    active = [comp for comp, is_wide in wide.items() if is_wide]
    if len(active) != 1:
        raise CalibrationError(
            f"manifest config is not single-degradation-dominant (varied: {active or 'none'})"
        )
    return active[0]


def _feature_label_pairs(
    manifest_path: str | Path, component: str
) -> list[tuple[float, Level]]:
    _, records = read_manifest(manifest_path)
    root = Path(manifest_path).parent
    fn = FEATURE_FUNCS[component]
    pairs = []
    for rec in records:
        img = from_uint8(load_image_u8(root / rec["lr_path"]))
        pairs.append((fn(img), Level(rec["bins"][component])))
    return pairs


def calibrate_from_features(
    pairs_by_component: dict[str, Sequence[tuple[float, Level]]],
    min_per_class: int = 100,
    metadata: dict[str, Any] | None = None,
) -> Calibration:
    """Fit cut points from (feature, label) pairs.

    Cuts are midpoints between adjacent class-conditional medians on an
    alternating fit split; the held-out half provides the recorded accuracy.
    """
    if not pairs_by_component:
        raise CalibrationError("no calibration data supplied")
    cuts: dict[str, tuple[float, float]] = {}
    meta: dict[str, Any] = dict(metadata or {})
    meta["components"] = {}
    for comp in COMPONENTS:
        pairs = list(pairs_by_component.get(comp, ()))
        if not pairs:
            raise CalibrationError(f"no calibration records for component {comp!r}")
        fit = pairs[0::2]
        held = pairs[1::2] or fit
        medians = []
        counts = {}
        for level in _LEVELS:
            feats = [f for f, lab in fit if lab is level]
            counts[level.value] = sum(1 for _, lab in pairs if lab is level)
            if counts[level.value] < min_per_class:
                raise CalibrationError(
                    f"component {comp!r} class {level.value!r} has "
                    f"{counts[level.value]} records, needs >= {min_per_class}"
                )
            medians.append(float(np.median(feats)))
        if not medians[0] < medians[1] < medians[2]:
            raise CalibrationError(
                f"class medians for {comp} are not increasing: {medians}"
            )
        lo = 0.5 * (medians[0] + medians[1])
        hi = 0.5 * (medians[1] + medians[2])
        cuts[comp] = (lo, hi)
        correct = sum(
            1 for f, lab in held if _level_from_cuts(f, lo, hi) is lab
        )
        meta["components"][comp] = {
            "class_counts": counts,
            "class_medians": medians,
            "held_out_accuracy": correct / len(held),
            "held_out_n": len(held),
        }
    return Calibration(cuts=cuts, metadata=meta)


def _level_from_cuts(feature: float, lo: float, hi: float) -> Level:
    if feature < lo:
        return Level.LIGHT
    if feature < hi:
        return Level.MEDIUM
    return Level.HEAVY


def calibrate(
    manifest_paths: Sequence[str | Path] | str | Path,
    min_per_class: int = 100,
) -> Calibration:
    """Calibrate from one or more single-degradation-dominant manifests.

    Each manifest's header config determines which component it varies; every
    component must be covered by exactly one manifest.
    """
    if isinstance(manifest_paths, (str, Path)):
        manifest_paths = [manifest_paths]
    if not manifest_paths:
        raise CalibrationError("no calibration manifests supplied")
    pairs: dict[str, list[tuple[float, Level]]] = {}
    seeds: dict[str, int] = {}
    sizes: dict[str, int] = {}
    for path in manifest_paths:
        header, records = read_manifest(path)
        comp = dominant_component(DegradationConfig.from_dict(header["config"]["degradation"]))
        if comp in pairs:
            raise CalibrationError(f"component {comp!r} covered by more than one manifest")
        pairs[comp] = _feature_label_pairs(path, comp)
        seeds[comp] = header["config"]["global_seed"]
        sizes[comp] = len(records)
    missing = [c for c in COMPONENTS if c not in pairs]
    if missing:
        raise CalibrationError(f"no manifest covers component(s): {', '.join(missing)}")
    return calibrate_from_features(
        pairs, min_per_class=min_per_class, metadata={"set_seeds": seeds, "set_sizes": sizes}
    )


def evaluate_calibration(
    calibration: Calibration, manifest_paths: Sequence[str | Path] | str | Path
) -> dict[str, float]:
    """Per-component bin accuracy of a calibration on labeled manifests."""
    if isinstance(manifest_paths, (str, Path)):
        manifest_paths = [manifest_paths]
    out: dict[str, float] = {}
    for path in manifest_paths:
        header, _ = read_manifest(path)
        comp = dominant_component(DegradationConfig.from_dict(header["config"]["degradation"]))
        pairs = _feature_label_pairs(path, comp)
        correct = sum(1 for f, lab in pairs if calibration.level_for(comp, f) is lab)
        out[comp] = correct / len(pairs)
    return out


def estimate_bins(
    image: np.ndarray, calibration: Calibration, sr_context: bool = True
) -> PromptBins:
    """Threshold the three features into bins.

    The first-resize direction is not recoverable from a degraded image with
    these features and is emitted unspecified; the final downsample is
    declared by the caller's SR context.
    """
    return PromptBins(
        blur=calibration.level_for("blur", estimate_blur_metric(image)),
        resize1=Direction.UNSPECIFIED,
        noise=calibration.level_for("noise", estimate_noise_sigma(image)),
        compression=calibration.level_for("compression", estimate_blockiness(image)),
        resize2=sr_context,
    )


def estimate_prompt(
    image: np.ndarray, calibration: Calibration, sr_context: bool = True
) -> str:
    return render(estimate_bins(image, calibration, sr_context), PromptFormat())


def external_prompter_hook(
    image_path: str | Path, command_template: str, timeout: float = 30.0
) -> str:
    """Run a user command to produce a prompt from an image path.

    "{image}" in the template is replaced with the (quoted) path; stdout is
    validated by the prompt grammar before being returned.
    """
    command = command_template.replace("{image}", shlex.quote(str(image_path)))
    try:
        proc = subprocess.run(
            command, shell=True, capture_output=True, text=True, timeout=timeout
        )
    except subprocess.TimeoutExpired as exc:
        raise HookError(f"prompter command timed out after {timeout}s: {command}") from exc
    if proc.returncode != 0:
        raise HookError(
            f"prompter command exited with status {proc.returncode}; "
            f"stderr: {proc.stderr.strip()!r}"
        )
    text = proc.stdout.strip()
    try:
        parse(text)
    except Exception as exc:
        raise HookError(f"prompter output rejected by grammar ({exc}); raw output: {text!r}") from exc
    return text
