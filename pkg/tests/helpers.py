"""Shared test utilities: synthetic photo-like images and independent
reference implementations used as oracles.

The reference resampler and convolution here are deliberately naive
per-pixel loops written from the definitions, independent of the package's
vectorized/compiled code paths.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.ndimage as ndi


def natural_image(h: int, w: int, seed: int) -> np.ndarray:
    """Photo-like field: shared multi-scale luminance, smooth chroma."""
    rng = np.random.default_rng(seed)
    low = ndi.gaussian_filter(rng.normal(0, 1, (h, w)), 24)
    mid = ndi.gaussian_filter(rng.normal(0, 1, (h, w)), 4)
    fine = ndi.gaussian_filter(rng.normal(0, 1, (h, w)), 1)
    lum = 0.5 + 2.2 * low + 0.9 * mid + 0.5 * fine
    cr = ndi.gaussian_filter(rng.normal(0, 1, (h, w)), 32) * 1.5
    cb = ndi.gaussian_filter(rng.normal(0, 1, (h, w)), 32) * 1.5
    img = np.stack([lum + cr, lum - 0.5 * cr - 0.5 * cb, lum + cb], axis=2)
    return np.clip(img, 0, 1)


def reflect_index(i: int, n: int) -> int:
    """reflect-101 index (edge pixel not duplicated), any offset."""
    if n == 1:
        return 0
    period = 2 * n - 2
    i %= period
    if i < 0:
        i += period
    return period - i if i >= n else i


def brute_convolve_at(plane: np.ndarray, kernel: np.ndarray, i: int, j: int) -> float:
    """Direct convolution sum at one pixel with reflect-101 borders."""
    h, w = plane.shape
    kh, kw = kernel.shape
    cy, cx = kh // 2, kw // 2
    acc = 0.0
    for u in range(kh):
        for v in range(kw):
            y = reflect_index(i + cy - u, h)
            x = reflect_index(j + cx - v, w)
            acc += kernel[u, v] * plane[y, x]
    return acc


def _cubic(t: float, a: float = -0.5) -> float:
    t = abs(t)
    if t <= 1.0:
        return (a + 2) * t**3 - (a + 3) * t**2 + 1
    if t < 2.0:
        return a * t**3 - 5 * a * t**2 + 8 * a * t - 4 * a
    return 0.0


def reference_resize(img: np.ndarray, oh: int, ow: int, method: str) -> np.ndarray:
    """Definitional per-pixel resampler: pixel-center mapping, edge clamp,
    exact interval overlap for area."""
    h, w, c = img.shape
    out = np.zeros((oh, ow, c))
    sy, sx = h / oh, w / ow
    for i in range(oh):
        for j in range(ow):
            for ch in range(c):
                if method == "area":
                    y0, y1 = i * sy, (i + 1) * sy
                    x0, x1 = j * sx, (j + 1) * sx
                    acc = 0.0
                    for y in range(int(math.floor(y0)), min(int(math.ceil(y1)), h)):
                        oy = min(y1, y + 1) - max(y0, y)
                        if oy <= 0:
                            continue
                        for x in range(int(math.floor(x0)), min(int(math.ceil(x1)), w)):
                            ox = min(x1, x + 1) - max(x0, x)
                            if ox > 0:
                                acc += oy * ox * img[y, x, ch]
                    out[i, j, ch] = acc / (sy * sx)
                elif method == "bilinear":
                    fy = (i + 0.5) * sy - 0.5
                    fx = (j + 0.5) * sx - 0.5
                    y0, x0 = math.floor(fy), math.floor(fx)
                    wy, wx = fy - y0, fx - x0
                    acc = 0.0
                    for dy, py in ((0, 1 - wy), (1, wy)):
                        for dx, px in ((0, 1 - wx), (1, wx)):
                            y = min(max(y0 + dy, 0), h - 1)
                            x = min(max(x0 + dx, 0), w - 1)
                            acc += py * px * img[y, x, ch]
                    out[i, j, ch] = acc
                elif method == "bicubic":
                    fy = (i + 0.5) * sy - 0.5
                    fx = (j + 0.5) * sx - 0.5
                    y0, x0 = math.floor(fy), math.floor(fx)
                    wy, wx = fy - y0, fx - x0
                    acc = 0.0
                    for dy in range(-1, 3):
                        for dx in range(-1, 3):
                            y = min(max(y0 + dy, 0), h - 1)
                            x = min(max(x0 + dx, 0), w - 1)
                            acc += _cubic(dy - wy) * _cubic(dx - wx) * img[y, x, ch]
                    out[i, j, ch] = acc
                else:
                    raise ValueError(method)
    return out
