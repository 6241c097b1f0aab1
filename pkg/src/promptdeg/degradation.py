"""Sampling and application of the five-stage degradation pipeline.

A DegradationSpec is one fully-sampled realization of
blur -> resize1 -> noise -> compression -> resize2; apply() runs it on an HR
image and returns the LR result at 1/scale_factor resolution.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import ops
from .image import clamp01, ensure_image

STAGES = ("blur", "resize1", "noise", "compression", "resize2")
BLUR_KINDS = ("iso", "aniso")
NOISE_KINDS = ("gaussian", "poisson")


class SpecRecordError(ValueError):
    """A serialized degradation spec is missing a field or out of range."""


def _check_range(name: str, rng: tuple[float, float]) -> None:
    lo, hi = rng
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError(f"{name} must be a finite (low, high) with low <= high, got {rng}")


def _check_probs(name: str, probs: tuple[float, ...], n: int) -> None:
    if len(probs) != n:
        raise ValueError(f"{name} must have {n} entries, got {len(probs)}")
    if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
        raise ValueError(f"{name} must be nonnegative and sum to 1, got {probs}")


@dataclass(frozen=True)
class DegradationConfig:
    """Sampling distributions for every pipeline parameter.

    Defaults reproduce the reference setting: equal-probability blur and
    noise kinds, kernel widths {7, 9, ..., 21}, sigma U[0.2, 3],
    resize methods area/bilinear/bicubic at [0.3, 0.4, 0.3],
    gamma1 U[0.15, 1.5], Gaussian level U[1, 30], Poisson level U[0.05, 3],
    JPEG quality U[30, 95], x4 scale.
    """

    blur_kind_prob: tuple[float, float] = (0.5, 0.5)  # (iso, aniso)
    eta_choices: tuple[int, ...] = (7, 9, 11, 13, 15, 17, 19, 21)
    sigma_range: tuple[float, float] = (0.2, 3.0)
    theta_range: tuple[float, float] = (0.0, math.pi)
    resize_method_probs: tuple[float, float, float] = (0.3, 0.4, 0.3)
    gamma1_range: tuple[float, float] = (0.15, 1.5)
    two_stage_resize: bool = True
    noise_kind_prob: tuple[float, float] = (0.5, 0.5)  # (gaussian, poisson)
    phi1_range: tuple[float, float] = (1.0, 30.0)
    phi2_range: tuple[float, float] = (0.05, 3.0)
    gray_noise_prob: float = 0.5
    q_range: tuple[float, float] = (30.0, 95.0)
    scale_factor: int = 4
    order_mode: str = "fixed"

    def __post_init__(self) -> None:
        _check_probs("blur_kind_prob", self.blur_kind_prob, 2)
        _check_probs("resize_method_probs", self.resize_method_probs, 3)
        _check_probs("noise_kind_prob", self.noise_kind_prob, 2)
        if not self.eta_choices:
            raise ValueError("eta_choices must be nonempty")
        for eta in self.eta_choices:
            if eta < 3 or eta % 2 == 0:
                raise ValueError(f"eta_choices must all be odd and >= 3, got {eta}")
        for name in ("sigma_range", "theta_range", "gamma1_range", "phi1_range", "phi2_range", "q_range"):
            _check_range(name, getattr(self, name))
        if self.sigma_range[0] <= 0 or self.phi1_range[0] <= 0 or self.phi2_range[0] <= 0:
            raise ValueError("sigma_range, phi1_range and phi2_range must be positive")
        if not 0.0 <= self.gray_noise_prob <= 1.0:
            raise ValueError(f"gray_noise_prob must be in [0, 1], got {self.gray_noise_prob}")
        if self.scale_factor < 1:
            raise ValueError(f"scale_factor must be >= 1, got {self.scale_factor}")
        if self.order_mode not in ("fixed", "shuffled"):
            raise ValueError(f"order_mode must be 'fixed' or 'shuffled', got {self.order_mode!r}")

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for key, val in d.items():
            if isinstance(val, tuple):
                d[key] = list(val)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DegradationConfig":
        kwargs: dict[str, Any] = {}
        for field in dataclasses.fields(cls):
            if field.name not in d:
                continue
            val = d[field.name]
            kwargs[field.name] = tuple(val) if isinstance(val, list) else val
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown degradation config fields: {sorted(unknown)}")
        return cls(**kwargs)


@dataclass(frozen=True)
class DegradationSpec:
    """One sampled realization of the degradation pipeline."""

    blur_kind: str
    eta: int
    sigma_x: float
    sigma_y: float
    theta: float
    resize1_method: str
    gamma1: float
    noise_kind: str
    noise_level: float
    gray_noise: bool
    jpeg_q: float
    resize2_method: str
    stage_order: tuple[str, ...] = STAGES

    @property
    def sigma_mean(self) -> float:
        return 0.5 * (self.sigma_x + self.sigma_y)

    def validate(self) -> None:
        if self.blur_kind not in BLUR_KINDS:
            raise SpecRecordError(f"blur_kind must be one of {BLUR_KINDS}, got {self.blur_kind!r}")
        if self.eta < 3 or self.eta % 2 == 0:
            raise SpecRecordError(f"eta must be odd and >= 3, got {self.eta}")
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise SpecRecordError(f"sigmas must be positive, got {self.sigma_x}, {self.sigma_y}")
        if self.blur_kind == "iso" and self.sigma_x != self.sigma_y:
            raise SpecRecordError("iso blur requires sigma_x == sigma_y")
        if self.resize1_method not in ops.RESIZE_METHODS or self.resize2_method not in ops.RESIZE_METHODS:
            raise SpecRecordError(
                f"resize methods must be in {ops.RESIZE_METHODS}, "
                f"got {self.resize1_method!r}, {self.resize2_method!r}"
            )
        if not self.gamma1 > 0:
            raise SpecRecordError(f"gamma1 must be positive, got {self.gamma1}")
        if self.noise_kind not in NOISE_KINDS:
            raise SpecRecordError(f"noise_kind must be one of {NOISE_KINDS}, got {self.noise_kind!r}")
        if not self.noise_level > 0:
            raise SpecRecordError(f"noise_level must be positive, got {self.noise_level}")
        if not 1 <= round(self.jpeg_q) <= 100:
            raise SpecRecordError(f"jpeg_q must round into [1, 100], got {self.jpeg_q}")
        if sorted(self.stage_order) != sorted(STAGES):
            raise SpecRecordError(f"stage_order must permute {STAGES}, got {self.stage_order}")

    def validate_against(self, config: DegradationConfig) -> None:
        """Check every field lies inside the ranges of the producing config."""
        self.validate()

        def inside(name: str, v: float, rng: tuple[float, float]) -> None:
            if not rng[0] <= v <= rng[1]:
                raise ValueError(f"{name}={v} outside configured range {rng}")

        if self.eta not in config.eta_choices:
            raise ValueError(f"eta={self.eta} not in configured choices {config.eta_choices}")
        inside("sigma_x", self.sigma_x, config.sigma_range)
        inside("sigma_y", self.sigma_y, config.sigma_range)
        if config.two_stage_resize:
            inside("gamma1", self.gamma1, config.gamma1_range)
        level_range = config.phi1_range if self.noise_kind == "gaussian" else config.phi2_range
        inside("noise_level", self.noise_level, level_range)
        inside("jpeg_q", self.jpeg_q, config.q_range)
        if config.order_mode == "fixed" and self.stage_order != STAGES:
            raise ValueError("stage_order must be the fixed order under order_mode='fixed'")


def sample_spec(config: DegradationConfig, rng: np.random.Generator) -> DegradationSpec:
    """Draw one complete spec from the configured distributions.

    Draw order is fixed (blur kind, eta, sigmas/theta, resize1 method,
    gamma1, noise kind, level, gray flag, q, resize2 method, stage order) so
    that a given rng state always yields the same spec.
    """
    if not isinstance(config, DegradationConfig):
        raise ValueError(f"expected DegradationConfig, got {type(config).__name__}")

    blur_kind = BLUR_KINDS[_categorical(rng, config.blur_kind_prob)]
    eta = int(config.eta_choices[rng.integers(len(config.eta_choices))])
    sigma_x = rng.uniform(*config.sigma_range)
    if blur_kind == "iso":
        sigma_y = sigma_x
        theta = 0.0
    else:
        sigma_y = rng.uniform(*config.sigma_range)
        theta = rng.uniform(*config.theta_range)

    resize1_method = ops.RESIZE_METHODS[_categorical(rng, config.resize_method_probs)]
    gamma1 = rng.uniform(*config.gamma1_range) if config.two_stage_resize else 1.0

    noise_kind = NOISE_KINDS[_categorical(rng, config.noise_kind_prob)]
    level_range = config.phi1_range if noise_kind == "gaussian" else config.phi2_range
    noise_level = rng.uniform(*level_range)
    gray_noise = bool(rng.random() < config.gray_noise_prob)

    jpeg_q = rng.uniform(*config.q_range)
    resize2_method = ops.RESIZE_METHODS[_categorical(rng, config.resize_method_probs)]

    if config.order_mode == "shuffled":
        order = [STAGES[i] for i in rng.permutation(len(STAGES))]
        i1, i2 = order.index("resize1"), order.index("resize2")
        # The LR-dims contract requires resize1 to run before resize2.
        if i1 > i2:
            order[i1], order[i2] = order[i2], order[i1]
        stage_order = tuple(order)
    else:
        stage_order = STAGES

    return DegradationSpec(
        blur_kind=blur_kind,
        eta=eta,
        sigma_x=float(sigma_x),
        sigma_y=float(sigma_y),
        theta=float(theta),
        resize1_method=resize1_method,
        gamma1=float(gamma1),
        noise_kind=noise_kind,
        noise_level=float(noise_level),
        gray_noise=gray_noise,
        jpeg_q=float(jpeg_q),
        resize2_method=resize2_method,
        stage_order=stage_order,
    )


def _categorical(rng: np.random.Generator, probs: tuple[float, ...]) -> int:
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def blur_kernel(spec: DegradationSpec) -> np.ndarray:
    if spec.blur_kind == "iso":
        return ops.gaussian_kernel_iso(spec.eta, spec.sigma_x)
    return ops.gaussian_kernel_aniso(spec.eta, spec.sigma_x, spec.sigma_y, spec.theta)


def apply(
    spec: DegradationSpec,
    hr: np.ndarray,
    rng: np.random.Generator,
    config: DegradationConfig | None = None,
) -> np.ndarray:
    """Run the degradation pipeline on an HR image.

    The output always has dims hr_dims / scale_factor regardless of the stage
    order; blur and resize run unclamped, noise and the final result clamp to
    [0, 1], and the JPEG stage quantizes to 8 bits internally.
    """
    config = config or DegradationConfig()
    spec.validate()
    hr = ensure_image(hr)
    h0, w0 = hr.shape[:2]
    s = config.scale_factor
    if h0 % s or w0 % s:
        raise ValueError(f"HR dims {h0}x{w0} not divisible by scale factor {s}")
    if h0 < 8 * s or w0 < 8 * s:
        raise ValueError(f"HR dims {h0}x{w0} below the 8x{s} pipeline minimum")

    img = hr
    for stage in spec.stage_order:
        if stage == "blur":
            img = ops.convolve(img, blur_kernel(spec))
        elif stage == "resize1":
            if not config.two_stage_resize:
                continue
            th = max(8, round(h0 * spec.gamma1))
            tw = max(8, round(w0 * spec.gamma1))
            img = ops.resize(img, th, tw, spec.resize1_method)
        elif stage == "noise":
            if spec.noise_kind == "gaussian":
                img = ops.add_gaussian_noise(img, spec.noise_level, spec.gray_noise, rng)
            else:
                img = ops.add_poisson_noise(img, spec.noise_level, spec.gray_noise, rng)
        elif stage == "compression":
            img = ops.jpeg_roundtrip(img, spec.jpeg_q)
        elif stage == "resize2":
            img = ops.resize(img, h0 // s, w0 // s, spec.resize2_method)
    return clamp01(img)


_RECORD_FIELDS = (
    "blur_kind",
    "eta",
    "sigma_x",
    "sigma_y",
    "theta",
    "resize1_method",
    "gamma1",
    "noise_kind",
    "noise_level",
    "gray_noise",
    "jpeg_q",
    "resize2_method",
    "stage_order",
)


def spec_to_record(spec: DegradationSpec) -> dict[str, Any]:
    """Flat key-value record; floats survive JSON round trips losslessly."""
    rec = {name: getattr(spec, name) for name in _RECORD_FIELDS}
    rec["stage_order"] = list(spec.stage_order)
    return rec


def record_to_spec(record: dict[str, Any]) -> DegradationSpec:
    """Inverse of spec_to_record; raises SpecRecordError naming bad fields."""
    missing = [name for name in _RECORD_FIELDS if name not in record]
    if missing:
        raise SpecRecordError(f"spec record missing field(s): {', '.join(missing)}")
    unknown = set(record) - set(_RECORD_FIELDS)
    if unknown:
        raise SpecRecordError(f"spec record has unknown field(s): {', '.join(sorted(unknown))}")
    try:
        spec = DegradationSpec(
            blur_kind=str(record["blur_kind"]),
            eta=int(record["eta"]),
            sigma_x=float(record["sigma_x"]),
            sigma_y=float(record["sigma_y"]),
            theta=float(record["theta"]),
            resize1_method=str(record["resize1_method"]),
            gamma1=float(record["gamma1"]),
            noise_kind=str(record["noise_kind"]),
            noise_level=float(record["noise_level"]),
            gray_noise=bool(record["gray_noise"]),
            jpeg_q=float(record["jpeg_q"]),
            resize2_method=str(record["resize2_method"]),
            stage_order=tuple(record["stage_order"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecRecordError):
            raise
        raise SpecRecordError(f"malformed spec record: {exc}") from exc
    spec.validate()
    return spec
