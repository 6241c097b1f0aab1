"""Hot convolution kernel with a compiled core and a pure-Python fallback.

The compiled (Cython) backend is used when the extension built; otherwise the
scipy-backed fallback takes over. Set PROMPTDEG_BACKEND=python|compiled to
force one. Rank-1 (separable) kernels, which cover isotropic and
axis-aligned Gaussians, take a two-pass fast path in either backend.

Both backends compute the same convolution; floating-point results may
differ at machine-epsilon level between them, so bit-reproducibility
guarantees hold within one backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import pure

AVAILABLE_BACKENDS = {
    "python": (pure.convolve2d_reflect, pure.convolve_sep_reflect),
}

try:
    from . import _native

    AVAILABLE_BACKENDS["compiled"] = (
        _native.convolve2d_reflect,
        _native.convolve_sep_reflect,
    )
except ImportError:
    _native = None


def _select_default() -> str:
    forced = os.environ.get("PROMPTDEG_BACKEND")
    if forced:
        if forced not in AVAILABLE_BACKENDS:
            raise ImportError(
                f"PROMPTDEG_BACKEND={forced!r} requested but only "
                f"{sorted(AVAILABLE_BACKENDS)} are available"
            )
        return forced
    return "compiled" if "compiled" in AVAILABLE_BACKENDS else "python"


DEFAULT_BACKEND = _select_default()

_SEPARABLE_RTOL = 1e-12


def backend_name() -> str:
    return DEFAULT_BACKEND


def separable_factors(kernel: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """(ky, kx) with outer(ky, kx) == kernel for rank-1 kernels, else None."""
    u, s, vt = np.linalg.svd(kernel)
    if s[0] == 0.0 or (len(s) > 1 and s[1] > s[0] * _SEPARABLE_RTOL):
        return None
    scale = np.sqrt(s[0])
    ky = u[:, 0] * scale
    kx = vt[0] * scale
    if ky.sum() < 0:
        ky, kx = -ky, -kx
    if np.abs(np.outer(ky, kx) - kernel).max() > s[0] * 1e-12:
        return None
    return ky, kx


def convolve2d(plane: np.ndarray, kernel: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Convolve one (H, W) plane with an odd 2-D kernel, reflect-101 borders."""
    full, sep = AVAILABLE_BACKENDS[backend or DEFAULT_BACKEND]
    plane = np.ascontiguousarray(plane, dtype=np.float64)
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    factors = separable_factors(kernel)
    if factors is not None:
        ky, kx = factors
        return sep(plane, np.ascontiguousarray(ky), np.ascontiguousarray(kx))
    return full(plane, kernel)
