"""Deterministic image-processing primitives for the degradation pipeline.

Gaussian blur kernels (isotropic / rotated anisotropic), convolution with
reflect-101 borders, area / bilinear / bicubic resampling with pixel-center
alignment, Gaussian and Poisson noise injection, and a baseline-JPEG
round trip.

All functions are pure: given the same inputs (and the same rng state for the
noise injectors) they return identical results within one build.
"""

from __future__ import annotations

import io
import math

import numpy as np
from PIL import Image

from . import kernels
from .image import clamp01, ensure_image, from_uint8, to_uint8

RESIZE_METHODS = ("area", "bilinear", "bicubic")

# Catmull-Rom cubic coefficient; the SR-literature default.
BICUBIC_A = -0.5


def _check_eta(eta: int) -> int:
    if not isinstance(eta, (int, np.integer)):
        raise ValueError(f"kernel width must be an integer, got {eta!r}")
    if eta < 3 or eta % 2 == 0:
        raise ValueError(f"kernel width must be odd and >= 3, got {eta}")
    return int(eta)


def gaussian_kernel_iso(eta: int, sigma: float) -> np.ndarray:
    """Isotropic Gaussian blur kernel of odd side length eta, unit sum."""
    eta = _check_eta(eta)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    half = eta // 2
    d = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(d**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def gaussian_kernel_aniso(eta: int, sigma_x: float, sigma_y: float, theta: float) -> np.ndarray:
    """Rotated anisotropic Gaussian kernel.

    sigma_x scales the kernel along the x axis (columns) before rotation by
    theta; covariance is R(theta) @ diag(sx^2, sy^2) @ R(theta)^T.
    """
    eta = _check_eta(eta)
    if not (sigma_x > 0 and sigma_y > 0):
        raise ValueError(f"sigmas must be positive, got {sigma_x}, {sigma_y}")
    half = eta // 2
    d = np.arange(-half, half + 1, dtype=np.float64)
    dx, dy = np.meshgrid(d, d)  # dx varies along columns, dy along rows
    c, s = math.cos(theta), math.sin(theta)
    vxx = c * c * sigma_x**2 + s * s * sigma_y**2
    vyy = s * s * sigma_x**2 + c * c * sigma_y**2
    vxy = c * s * (sigma_x**2 - sigma_y**2)
    det = vxx * vyy - vxy * vxy
    # Quadratic form of the inverse covariance.
    q = (vyy * dx**2 - 2.0 * vxy * dx * dy + vxx * dy**2) / det
    k = np.exp(-0.5 * q)
    return k / k.sum()


def convolve(image: np.ndarray, kernel: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Convolve each channel with the kernel; reflect-101 border handling."""
    image = ensure_image(image)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValueError(f"kernel must be 2-D with odd dims, got shape {kernel.shape}")
    out = np.empty_like(image)
    for c in range(image.shape[2]):
        out[:, :, c] = kernels.convolve2d(image[:, :, c], kernel, backend=backend)
    return out


def _cubic_weight(t: np.ndarray, a: float = BICUBIC_A) -> np.ndarray:
    at = np.abs(t)
    w = np.where(
        at <= 1.0,
        (a + 2.0) * at**3 - (a + 3.0) * at**2 + 1.0,
        np.where(at < 2.0, a * at**3 - 5.0 * a * at**2 + 8.0 * a * at - 4.0 * a, 0.0),
    )
    return w


def _axis_weights(n_in: int, n_out: int, method: str) -> np.ndarray:
    """(n_out, n_in) resampling matrix for one axis.

    bilinear/bicubic use pixel-center alignment src = (dst + 0.5) * scale - 0.5
    with edge replication; area uses exact interval overlap, which reduces to
    the k-block mean for integer downscale factors.
    """
    w = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    if method == "area":
        for i in range(n_out):
            lo = i * scale
            hi = (i + 1) * scale
            j0 = int(math.floor(lo))
            j1 = min(int(math.ceil(hi)), n_in)
            for j in range(j0, j1):
                overlap = min(hi, j + 1) - max(lo, j)
                if overlap > 0:
                    w[i, j] = overlap / scale
    elif method == "bilinear":
        src = (np.arange(n_out) + 0.5) * scale - 0.5
        j0 = np.floor(src).astype(int)
        f = src - j0
        for i in range(n_out):
            for j, wt in ((j0[i], 1.0 - f[i]), (j0[i] + 1, f[i])):
                w[i, min(max(j, 0), n_in - 1)] += wt
    elif method == "bicubic":
        src = (np.arange(n_out) + 0.5) * scale - 0.5
        j0 = np.floor(src).astype(int)
        f = src - j0
        for i in range(n_out):
            taps = _cubic_weight(np.array([f[i] + 1.0, f[i], 1.0 - f[i], 2.0 - f[i]]))
            for off, wt in zip((-1, 0, 1, 2), taps):
                w[i, min(max(j0[i] + off, 0), n_in - 1)] += wt
    else:
        raise ValueError(f"unknown resize method {method!r}; expected one of {RESIZE_METHODS}")
    return w


def resize(image: np.ndarray, out_height: int, out_width: int, method: str) -> np.ndarray:
    """Resample to (out_height, out_width) with the given method."""
    image = ensure_image(image)
    if out_height < 1 or out_width < 1:
        raise ValueError(f"output dims must be >= 1, got {out_height}x{out_width}")
    h, w = image.shape[:2]
    wr = _axis_weights(h, out_height, method)
    wc = _axis_weights(w, out_width, method)
    # rows: (oh, h) @ (h, w*c); cols: contract the w axis.
    tmp = np.tensordot(wr, image, axes=(1, 0))
    out = np.tensordot(tmp, wc, axes=(1, 1))  # (oh, c, ow)
    return np.ascontiguousarray(np.moveaxis(out, 1, 2))


def add_gaussian_noise(
    image: np.ndarray, level: float, gray: bool, rng: np.random.Generator
) -> np.ndarray:
    """Additive Gaussian noise with std level/255; gray shares one noise plane."""
    image = ensure_image(image)
    if not level > 0:
        raise ValueError(f"noise level must be positive, got {level}")
    sigma = level / 255.0
    h, w, c = image.shape
    shape = (h, w, 1) if gray else (h, w, c)
    noise = rng.normal(0.0, sigma, size=shape)
    return clamp01(image + noise)


def add_poisson_noise(
    image: np.ndarray, level: float, gray: bool, rng: np.random.Generator
) -> np.ndarray:
    """Shot noise: out = Poisson(in * kappa) / kappa with kappa = 255 / level.

    gray samples one plane from the channel-mean intensities and adds the same
    residual to every channel.
    """
    image = ensure_image(image)
    if not level > 0:
        raise ValueError(f"noise level must be positive, got {level}")
    kappa = 255.0 / level
    if gray:
        mean_plane = image.mean(axis=2, keepdims=True)
        lam = np.clip(mean_plane, 0.0, None) * kappa
        residual = rng.poisson(lam).astype(np.float64) / kappa - np.clip(mean_plane, 0.0, None)
        return clamp01(image + residual)
    lam = np.clip(image, 0.0, None) * kappa
    return clamp01(rng.poisson(lam).astype(np.float64) / kappa)


def jpeg_roundtrip(image: np.ndarray, q: float, subsampling: str = "4:2:0") -> np.ndarray:
    """Encode to baseline JPEG at quality round(q) and decode back.

    The 8-bit conversion (round-half-even) is part of the stage being
    modeled. Deterministic for fixed (image, q, subsampling).
    """
    image = ensure_image(image)
    if image.shape[0] < 8 or image.shape[1] < 8:
        raise ValueError(f"JPEG stage needs dims >= 8, got {image.shape[:2]}")
    qi = round(float(q))
    if not 1 <= qi <= 100:
        raise ValueError(f"quality factor must round into [1, 100], got {q}")
    u8 = to_uint8(image)
    single = u8.shape[2] == 1
    pil = Image.fromarray(u8[:, :, 0] if single else u8, mode="L" if single else "RGB")
    buf = io.BytesIO()
    if single:
        pil.save(buf, format="JPEG", quality=qi)
    else:
        pil.save(buf, format="JPEG", quality=qi, subsampling=subsampling)
    decoded = np.asarray(Image.open(io.BytesIO(buf.getvalue())))
    return from_uint8(decoded)
