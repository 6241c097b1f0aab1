"""Image array helpers: validation, 8-bit conversion, PNG/JPEG I/O, luma, PSNR.

Images are float64 arrays of shape (H, W, C) with C in {1, 3}, holding
sRGB-encoded intensities nominally in [0, 1]. Intermediate pipeline stages may
overshoot that interval (e.g. bicubic ringing); clamping happens only where
the degradation model says it does.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image


def ensure_image(img: np.ndarray) -> np.ndarray:
    """Validate an (H, W, C) float image and return it as float64."""
    if not isinstance(img, np.ndarray):
        raise ValueError(f"image must be a numpy array, got {type(img).__name__}")
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"image must have shape (H, W, 1) or (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image has empty spatial dims: {img.shape}")
    img = np.asarray(img, dtype=np.float64)
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite samples")
    return img


def clamp01(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0)


def from_uint8(arr: np.ndarray) -> np.ndarray:
    """uint8 (H, W) or (H, W, C) -> float64 (H, W, C) in [0, 1]."""
    arr = np.asarray(arr)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr.astype(np.float64) / 255.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize with round-half-even."""
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def luma(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma plane, shape (H, W)."""
    img = ensure_image(img)
    if img.shape[2] == 1:
        return img[:, :, 0]
    return img[:, :, 0] * 0.299 + img[:, :, 1] * 0.587 + img[:, :, 2] * 0.114


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB between two [0, 1] images; inf for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return -10.0 * np.log10(mse)


def _to_pil(u8: np.ndarray) -> Image.Image:
    if u8.ndim == 3 and u8.shape[2] == 1:
        u8 = u8[:, :, 0]
    mode = "L" if u8.ndim == 2 else "RGB"
    return Image.fromarray(u8, mode=mode)


def encode_png(u8: np.ndarray) -> bytes:
    buf = io.BytesIO()
    _to_pil(u8).save(buf, format="PNG")
    return buf.getvalue()


def write_png(path: Path | str, u8: np.ndarray) -> bytes:
    """Write a PNG and return the encoded bytes (for checksumming)."""
    data = encode_png(u8)
    Path(path).write_bytes(data)
    return data


def load_image_u8(path: Path | str) -> np.ndarray:
    """Decode any PIL-readable image to uint8 (H, W, 3) or (H, W, 1)."""
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im)[:, :, None]
        else:
            arr = np.asarray(im.convert("RGB"))
    return arr.astype(np.uint8)
