#!/usr/bin/env python3
"""Benchmark the compiled convolution backend against the pure-Python
fallback, plus end-to-end record throughput under each.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from promptdeg import kernels, ops
from promptdeg.degradation import DegradationConfig, DegradationSpec, STAGES, apply


def time_call(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_convolution(repeats: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'case':<28}" + "".join(f"{b:>14}" for b in sorted(kernels.AVAILABLE_BACKENDS)))
    for size, eta in ((64, 7), (256, 7), (256, 21), (512, 13)):
        img = rng.random((size, size, 3))
        k = ops.gaussian_kernel_iso(eta, eta / 6.0)
        row = f"{size}x{size}x3, eta={eta:<8}"
        for backend in sorted(kernels.AVAILABLE_BACKENDS):
            dt = time_call(lambda: ops.convolve(img, k, backend=backend), repeats)
            row += f"{dt * 1e3:>12.1f}ms"
        print(row)


def bench_pipeline(repeats: int) -> None:
    rng = np.random.default_rng(1)
    hr = rng.random((256, 256, 3))
    spec = DegradationSpec(
        blur_kind="aniso", eta=21, sigma_x=2.0, sigma_y=0.8, theta=0.6,
        resize1_method="bicubic", gamma1=0.7, noise_kind="gaussian",
        noise_level=12.0, gray_noise=False, jpeg_q=60.0,
        resize2_method="bilinear", stage_order=STAGES,
    )
    cfg = DegradationConfig()
    print(f"\n{'full record (256px HR, eta=21)':<28}", end="")
    for backend in sorted(kernels.AVAILABLE_BACKENDS):
        orig = kernels.DEFAULT_BACKEND
        kernels.DEFAULT_BACKEND = backend
        try:
            dt = time_call(lambda: apply(spec, hr, np.random.default_rng(2), config=cfg), repeats)
        finally:
            kernels.DEFAULT_BACKEND = orig
        print(f"{dt * 1e3:>12.1f}ms", end="")
    print()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"backends available: {sorted(kernels.AVAILABLE_BACKENDS)} "
          f"(default: {kernels.backend_name()})\n")
    bench_convolution(args.repeats)
    bench_pipeline(args.repeats)


if __name__ == "__main__":
    main()
