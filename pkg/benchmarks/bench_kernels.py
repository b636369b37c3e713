#!/usr/bin/env python3
"""Benchmark the numba-jitted kernels against their pure-NumPy fallbacks.

Usage: python benchmarks/bench_kernels.py [--reps 50]

Both backends are always importable from aliasnet.kernels regardless of the
ALIASNET_NO_NUMBA flag, so this script times them side by side in one
process.  FFT and BLAS paths are not benchmarked here: they have no numba
twin by design.
"""

import argparse
import time

import numpy as np

from aliasnet import kernels, metrics, phantom


def time_fn(fn, args, reps):
    fn(*args)  # warmup / jit
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        for _ in range(reps):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / reps)
    return best


def build_cases(rng):
    act = rng.standard_normal((2500, 512))
    vec = rng.standard_normal(10000)
    xs = (np.arange(100) - 49.5) * (2.0 / 99.0)
    params = np.array(
        [[e.cx, e.cy, e.a, e.b, np.cos(e.angle), np.sin(e.angle), e.value]
         for e in phantom.SHEPP_LOGAN_ELLIPSES]
    )
    img1 = rng.random((110, 110))
    img2 = rng.random((110, 110))
    win = metrics.gaussian_window()
    return [
        ("sigmoid (2500x512)", kernels.sigmoid_numpy, kernels.sigmoid_numba, (act,)),
        ("soft_threshold (10k)", kernels.soft_threshold_numpy,
         kernels.soft_threshold_numba, (vec, 0.01)),
        ("render_ellipses (100x100, 10 ellipses)", kernels.render_ellipses_numpy,
         kernels.render_ellipses_numba, (xs, -xs, params)),
        ("ssim_map (100x100, 11x11 window)", kernels.ssim_map_numpy,
         kernels.ssim_map_numba, (img1, img2, win, 1e-4, 9e-4)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=50)
    args = parser.parse_args()

    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':42s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, np_fn, nb_fn, fn_args in build_cases(rng):
        t_np = time_fn(np_fn, fn_args, args.reps)
        t_nb = time_fn(nb_fn, fn_args, args.reps)
        print(f"{name:42s} {t_np * 1e3:9.3f}ms {t_nb * 1e3:9.3f}ms {t_np / t_nb:7.2f}x")


if __name__ == "__main__":
    main()
