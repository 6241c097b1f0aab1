"""Discretized natural-language degradation prompts.

Continuous degradation parameters map to tri-level labels over uniform thirds
of their configured ranges; the rendered prompt is a comma-separated
descriptor list like "heavy blur, upsample, medium noise, medium compression,
downsample". Parsing is case-insensitive and order-agnostic.

Grammar (default form, EBNF):

    prompt     = [ descriptor, { ", ", descriptor } ] ;
    descriptor = level, " ", component | direction ;
    level      = "light" | "medium" | "heavy" ;
    component  = "blur" | "noise" | "compression" ;
    direction  = "upsample" | "downsample" | "unchange" ;

A bare direction token binds the first resize; a second "downsample" binds
the final one. The verbose form (behind the verbose flag) additionally
accepts parameter-valued descriptors such as "gaussian noise with noise
level 4.5", mapped through the same bins.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np

from .degradation import DegradationConfig, DegradationSpec


class PromptParseError(ValueError):
    """Prompt text contains tokens outside the descriptor grammar."""


class Level(enum.Enum):
    LIGHT = "light"
    MEDIUM = "medium"
    HEAVY = "heavy"
    UNSPECIFIED = "unspecified"

    def __str__(self) -> str:
        return self.value


class Direction(enum.Enum):
    UPSAMPLE = "upsample"
    DOWNSAMPLE = "downsample"
    UNCHANGE = "unchange"
    UNSPECIFIED = "unspecified"

    def __str__(self) -> str:
        return self.value


_LEVEL_ORDER = (Level.LIGHT, Level.MEDIUM, Level.HEAVY)


@dataclass(frozen=True)
class PromptBins:
    """Discretized degradation descriptors for one spec."""

    blur: Level = Level.UNSPECIFIED
    resize1: Direction = Direction.UNSPECIFIED
    noise: Level = Level.UNSPECIFIED
    compression: Level = Level.UNSPECIFIED
    resize2: bool = False  # final downsample present

    def to_dict(self) -> dict:
        return {
            "blur": self.blur.value,
            "resize1": self.resize1.value,
            "noise": self.noise.value,
            "compression": self.compression.value,
            "resize2": self.resize2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PromptBins":
        try:
            return cls(
                blur=Level(d["blur"]),
                resize1=Direction(d["resize1"]),
                noise=Level(d["noise"]),
                compression=Level(d["compression"]),
                resize2=bool(d["resize2"]),
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"malformed bins record: {exc}") from exc

    def weakens(self, other: "PromptBins") -> bool:
        """True if self equals other except for unspecified/absent components."""
        return (
            self.blur in (other.blur, Level.UNSPECIFIED)
            and self.resize1 in (other.resize1, Direction.UNSPECIFIED)
            and self.noise in (other.noise, Level.UNSPECIFIED)
            and self.compression in (other.compression, Level.UNSPECIFIED)
            and (self.resize2 == other.resize2 or not self.resize2)
        )


@dataclass(frozen=True)
class PromptFormat:
    """Rendering options: descriptor order and per-descriptor dropout."""

    order: str = "fixed"  # "fixed" | "shuffled"
    dropout: float = 0.0

    def __post_init__(self) -> None:
        if self.order not in ("fixed", "shuffled"):
            raise ValueError(f"order must be 'fixed' or 'shuffled', got {self.order!r}")
        if not 0.0 <= self.dropout <= 1.0:
            raise ValueError(f"dropout must be in [0, 1], got {self.dropout}")

    def to_dict(self) -> dict:
        return {"order": self.order, "dropout": self.dropout}

    @classmethod
    def from_dict(cls, d: dict) -> "PromptFormat":
        return cls(order=d["order"], dropout=d["dropout"])


def bin_level(value: float, lo: float, hi: float) -> Level:
    """Uniform thirds of [lo, hi]: half-open below, closed at the top."""
    if not lo <= value <= hi:
        raise ValueError(f"value {value} outside range [{lo}, {hi}]")
    if hi <= lo:
        return Level.LIGHT
    width = (hi - lo) / 3.0
    idx = min(2, int((value - lo) // width))
    return _LEVEL_ORDER[idx]


def _direction_of(gamma: float) -> Direction:
    if gamma < 0.95:
        return Direction.DOWNSAMPLE
    if gamma > 1.05:
        return Direction.UPSAMPLE
    return Direction.UNCHANGE


def bins_from_spec(spec: DegradationSpec, config: DegradationConfig) -> PromptBins:
    """Discretize a sampled spec against the ranges of its config.

    Blur is binned on the mean of the two sigmas; compression labels run
    opposite to the quality factor (low q = heavy); both noise kinds share
    the "noise" descriptor, each binned over its own level range.
    """
    spec.validate_against(config)
    level_range = config.phi1_range if spec.noise_kind == "gaussian" else config.phi2_range
    q_idx = _LEVEL_ORDER.index(bin_level(spec.jpeg_q, *config.q_range))
    return PromptBins(
        blur=bin_level(spec.sigma_mean, *config.sigma_range),
        resize1=_direction_of(spec.gamma1),
        noise=bin_level(spec.noise_level, *level_range),
        compression=_LEVEL_ORDER[2 - q_idx],
        resize2=config.scale_factor > 1,
    )


def _descriptors(bins: PromptBins) -> list[str]:
    out = []
    if bins.blur is not Level.UNSPECIFIED:
        out.append(f"{bins.blur} blur")
    if bins.resize1 is not Direction.UNSPECIFIED:
        out.append(str(bins.resize1))
    if bins.noise is not Level.UNSPECIFIED:
        out.append(f"{bins.noise} noise")
    if bins.compression is not Level.UNSPECIFIED:
        out.append(f"{bins.compression} compression")
    if bins.resize2:
        out.append("downsample")
    return out


def render(
    bins: PromptBins,
    fmt: PromptFormat = PromptFormat(),
    rng: np.random.Generator | None = None,
) -> str:
    """Render bins as a prompt string; unspecified components are omitted.

    Dropout decisions are drawn per descriptor in the fixed component order,
    then the surviving descriptors are optionally shuffled.
    """
    parts = _descriptors(bins)
    needs_rng = fmt.dropout > 0.0 or fmt.order == "shuffled"
    if needs_rng and rng is None:
        raise ValueError("rng is required for dropout > 0 or shuffled order")
    if fmt.dropout > 0.0:
        parts = [p for p in parts if not rng.random() < fmt.dropout]
    if fmt.order == "shuffled":
        parts = [parts[i] for i in rng.permutation(len(parts))]
    return ", ".join(parts)


_PLAIN_LEVEL = re.compile(r"^(light|medium|heavy)\s+(blur|noise|compression)$")
_DIRECTIONS = {"upsample", "downsample", "unchange"}
_VERBOSE_PATTERNS = (
    ("blur", re.compile(r"^gaussian\s+blur\s+with\s+sigma\s+([-\d.eE+]+)$")),
    ("resize1", re.compile(r"^resize\s+with\s+scale\s+([-\d.eE+]+)$")),
    ("noise", re.compile(r"^(?:gaussian|poisson)\s+noise\s+with\s+noise\s+level\s+([-\d.eE+]+)$")),
    ("compression", re.compile(r"^jpeg\s+compression\s+with\s+quality\s+([-\d.eE+]+)$")),
)


def parse(
    text: str,
    verbose: bool = False,
    config: DegradationConfig | None = None,
) -> PromptBins:
    """Parse a prompt back to bins; total over strings, raising
    PromptParseError for tokens outside the grammar.

    The verbose flag enables the parameter-valued descriptor forms, binned
    against the given (or default) config ranges.
    """
    fields: dict[str, object] = {}
    directions: list[str] = []
    bad: list[str] = []

    for raw in text.split(","):
        token = " ".join(raw.lower().split())
        if not token:
            continue
        if token in _DIRECTIONS:
            directions.append(token)
            continue
        m = _PLAIN_LEVEL.match(token)
        if m:
            _bind(fields, m.group(2), Level(m.group(1)), token, bad)
            continue
        if verbose and _parse_verbose(token, fields, bad, config or DegradationConfig()):
            continue
        bad.append(token)

    if bad:
        raise PromptParseError(f"unrecognized prompt token(s): {', '.join(repr(t) for t in bad)}")

    verbose_resize1 = fields.pop("resize1", None)
    if verbose_resize1 is not None:
        # With resize1 already bound, a bare token can only be the final downsample.
        if not directions:
            resize1, resize2 = verbose_resize1, False
        elif directions == ["downsample"]:
            resize1, resize2 = verbose_resize1, True
        else:
            raise PromptParseError(f"conflicting resize descriptors: {directions}")
    else:
        resize1, resize2 = _bind_directions(directions)

    return PromptBins(
        blur=fields.get("blur", Level.UNSPECIFIED),
        resize1=resize1,
        noise=fields.get("noise", Level.UNSPECIFIED),
        compression=fields.get("compression", Level.UNSPECIFIED),
        resize2=resize2,
    )


def _bind(fields: dict, name: str, value: object, token: str, bad: list[str]) -> None:
    if name in fields and fields[name] != value:
        raise PromptParseError(f"conflicting descriptors for {name}: {token!r}")
    fields[name] = value


def _bind_directions(directions: list[str]) -> tuple[Direction, bool]:
    """Assign bare direction tokens to the two resize slots, order-agnostic.

    One token binds resize1. With two tokens, the non-"downsample" one (or
    the first, if both are "downsample") binds resize1 and the "downsample"
    binds resize2.
    """
    if not directions:
        return Direction.UNSPECIFIED, False
    if len(directions) == 1:
        return Direction(directions[0]), False
    if len(directions) == 2:
        downs = directions.count("downsample")
        if downs == 2:
            return Direction.DOWNSAMPLE, True
        if downs == 1:
            other = next(t for t in directions if t != "downsample")
            return Direction(other), True
    raise PromptParseError(f"cannot bind direction tokens {directions} to two resize slots")


def _parse_verbose(
    token: str, fields: dict, bad: list[str], config: DegradationConfig
) -> bool:
    for name, pattern in _VERBOSE_PATTERNS:
        m = pattern.match(token)
        if not m:
            continue
        try:
            value = float(m.group(1))
        except ValueError:
            return False
        if name == "blur":
            level = bin_level(value, *config.sigma_range)
        elif name == "resize1":
            _bind(fields, "resize1", _direction_of(value), token, bad)
            return True
        elif name == "noise":
            rng_ = config.phi1_range if token.startswith("gaussian") else config.phi2_range
            level = bin_level(value, *rng_)
        else:
            q_idx = _LEVEL_ORDER.index(bin_level(value, *config.q_range))
            level = _LEVEL_ORDER[2 - q_idx]
        _bind(fields, name, level, token, bad)
        return True
    return False


def render_spec_verbose(spec: DegradationSpec, config: DegradationConfig | None = None) -> str:
    """Parameter-valued prompt form, e.g. "gaussian noise with noise level 4.5"."""
    config = config or DegradationConfig()
    parts = [
        f"gaussian blur with sigma {spec.sigma_mean:.6g}",
        f"resize with scale {spec.gamma1:.6g}",
        f"{spec.noise_kind} noise with noise level {spec.noise_level:.6g}",
        f"jpeg compression with quality {spec.jpeg_q:.6g}",
    ]
    if config.scale_factor > 1:
        parts.append("downsample")
    return ", ".join(parts)
