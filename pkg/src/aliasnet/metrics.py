"""Reconstruction quality metrics (NMSE, SSIM) and a purity-checked
per-frame latency benchmark.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


class NondeterminismError(RuntimeError):
    """A timed closure returned different outputs on repeated runs."""


@dataclass(frozen=True)
class QualityScore:
    nmse: float
    ssim: float


@dataclass(frozen=True)
class LatencyReport:
    per_frame_s: np.ndarray
    mean_s: float
    std_s: float
    fps: float


def _pair(est, ref):
    a = np.asarray(est, dtype=np.float64)
    b = np.asarray(ref, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def nmse(est, ref) -> float:
    """||est - ref||_2 / ||ref||_2 (norm ratio, not squared).

    Note the asymmetry: nmse(a, b) != nmse(b, a) in general.
    """
    a, b = _pair(est, ref)
    ref_norm = float(np.linalg.norm(b))
    if ref_norm == 0.0:
        raise ValueError("reference image has zero norm")
    return float(np.linalg.norm(a - b)) / ref_norm


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma * sigma))
    window = np.outer(g, g)
    return window / window.sum()


def ssim(est, ref, dynamic_range: float = 1.0) -> float:
    """Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), stabilizers
    (0.01 * range)^2 and (0.03 * range)^2, and symmetric boundary padding."""
    a, b = _pair(est, ref)
    if dynamic_range <= 0.0:
        raise ValueError("dynamic_range must be > 0")
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"image shape {a.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    window = gaussian_window()
    c1 = (0.01 * dynamic_range) ** 2
    c2 = (0.03 * dynamic_range) ** 2
    radius = SSIM_WINDOW // 2
    pad = [(radius, radius), (radius, radius)]
    pa = np.pad(a, pad, mode="symmetric")
    pb = np.pad(b, pad, mode="symmetric")
    return float(kernels.ssim_map(pa, pb, window, c1, c2).mean())


def quality(est, ref, dynamic_range: float = 1.0) -> QualityScore:
    return QualityScore(nmse=nmse(est, ref), ssim=ssim(est, ref, dynamic_range))


def benchmark_latency(recon_fn, frames, warmup: int = 1, reps: int = 3) -> LatencyReport:
    """Time ``recon_fn`` over all frames with a monotonic clock.

    ``warmup`` untimed passes come first; then ``reps`` timed passes.  The
    outputs of every timed pass must be bit-identical to the first one,
    otherwise a :class:`NondeterminismError` is raised (timing a non-pure
    closure would not be attributable).
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    frames = list(frames)
    if not frames:
        raise ValueError("no frames supplied")

    for _ in range(warmup):
        for frame in frames:
            recon_fn(frame)

    baseline: list[np.ndarray] = []
    timings = np.empty(reps * len(frames))
    pos = 0
    for rep in range(reps):
        for k, frame in enumerate(frames):
            started = time.perf_counter()
            out = recon_fn(frame)
            timings[pos] = time.perf_counter() - started
            pos += 1
            out = np.asarray(out)
            if rep == 0:
                baseline.append(out)
            elif not np.array_equal(out, baseline[k]):
                raise NondeterminismError(
                    f"outputs differ between timed runs at frame {k} (rep {rep})"
                )

    mean_s = float(timings.mean())
    std_s = float(timings.std())
    return LatencyReport(per_frame_s=timings, mean_s=mean_s, std_s=std_s, fps=1.0 / mean_s)
