"""Pure-Python (scipy-backed) convolution fallback."""

from __future__ import annotations

import numpy as np
import scipy.ndimage as ndi


def convolve2d_reflect(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # mode="mirror" is reflect-101: the edge pixel is not duplicated.
    return ndi.convolve(plane, kernel, mode="mirror")


def convolve_sep_reflect(plane: np.ndarray, ky: np.ndarray, kx: np.ndarray) -> np.ndarray:
    tmp = ndi.convolve1d(plane, kx, axis=1, mode="mirror")
    return ndi.convolve1d(tmp, ky, axis=0, mode="mirror")
