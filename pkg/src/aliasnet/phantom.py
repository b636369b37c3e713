"""Synthetic ground truth: a static head phantom, periodically deforming
dynamic sequences, and assembly of (aliased input, clean target) training
pairs under one fixed sampling mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, kspace


@dataclass(frozen=True)
class EllipseSpec:
    """One additive ellipse: center in [-1, 1]^2, semi-axes, rotation, intensity."""

    cx: float
    cy: float
    a: float
    b: float
    angle: float  # radians, counter-clockwise
    value: float

    def __post_init__(self):
        if self.a <= 0.0 or self.b <= 0.0:
            raise ValueError(f"semi-axes must be positive, got a={self.a}, b={self.b}")


def _deg(angle_deg: float) -> float:
    return angle_deg * np.pi / 180.0


# Ten-ellipse head phantom with contrast-friendly intensities summing into
# [0, 1].  The ventricles and the small bottom-outer blobs are exact mirror
# pairs, making the rendered image left-right symmetric.
SHEPP_LOGAN_ELLIPSES = (
    EllipseSpec(0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
    EllipseSpec(0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
    EllipseSpec(0.22, 0.0, 0.16, 0.41, _deg(-18.0), -0.2),
    EllipseSpec(-0.22, 0.0, 0.16, 0.41, _deg(18.0), -0.2),
    EllipseSpec(0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
    EllipseSpec(0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
    EllipseSpec(0.0, -0.1, 0.046, 0.046, 0.0, 0.1),
    EllipseSpec(-0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
    EllipseSpec(0.0, -0.606, 0.023, 0.023, 0.0, 0.1),
    EllipseSpec(0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
)

# table indices that move in dynamic sequences: the two ventricles translate
# and dilate, the bottom trio only translates
_VENTRICLES = (2, 3)
_BLOBS = (7, 8, 9)


def _pixel_coords(n: int) -> tuple[np.ndarray, np.ndarray]:
    # symmetric about 0 bit-for-bit, so mirrored ellipse tables render to
    # exactly mirrored images
    idx = (np.arange(n, dtype=np.float64) - (n - 1) / 2.0) * (2.0 / (n - 1))
    return idx, -idx  # xs (left to right), ys (top row = +1)


def _params(ellipses) -> np.ndarray:
    rows = np.empty((len(ellipses), 7))
    for k, e in enumerate(ellipses):
        rows[k] = (e.cx, e.cy, e.a, e.b, np.cos(e.angle), np.sin(e.angle), e.value)
    return rows


def render_ellipses(n: int, ellipses) -> np.ndarray:
    """Sum ellipse intensities on an n x n grid over [-1, 1]^2 (unclipped)."""
    xs, ys = _pixel_coords(n)
    return kernels.render_ellipses(xs, ys, _params(ellipses))


def shepp_logan(n: int) -> np.ndarray:
    """Head phantom on an n x n grid, intensities in [0, 1]."""
    if n < 16:
        raise ValueError(f"phantom needs n >= 16, got {n}")
    return np.clip(render_ellipses(n, SHEPP_LOGAN_ELLIPSES), 0.0, 1.0)


@dataclass(frozen=True)
class DynamicSequence:
    """Frames of a periodically deforming phantom, stacked (T, n, n)."""

    frames: np.ndarray
    period: int
    seed: int

    @property
    def n(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return self.frames.shape[0]


def dynamic_phantom(n: int, frames: int, period: int = 8, motion_amp: float = 0.15,
                    seed=0) -> DynamicSequence:
    """Phantom sequence whose ventricles and bottom blobs oscillate.

    Motion is sinusoidal with the given period (frames per cycle); directions
    and phase offsets are drawn once from the seeded generator, so a fixed
    seed reproduces the sequence exactly and frame ``t + period`` is
    bit-identical to frame ``t``.
    """
    if frames < 1:
        raise ValueError(f"frames must be >= 1, got {frames}")
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    if not 0.0 <= motion_amp <= 0.3:
        raise ValueError(f"motion_amp must lie in [0, 0.3], got {motion_amp}")

    rng = np.random.default_rng(seed)
    movers = _VENTRICLES + _BLOBS
    dir_angles = rng.uniform(0.0, 2.0 * np.pi, size=len(movers))
    phase_offsets = rng.uniform(0.0, 2.0 * np.pi, size=len(movers))
    dilation_phases = rng.uniform(0.0, 2.0 * np.pi, size=len(_VENTRICLES))

    shift_amp = 0.4 * motion_amp
    dilation_amp = 0.25 * motion_amp

    stack = np.empty((frames, n, n))
    for t in range(frames):
        phase = 2.0 * np.pi * (t % period) / period
        table = list(SHEPP_LOGAN_ELLIPSES)
        for m, idx in enumerate(movers):
            e = table[idx]
            wobble = shift_amp * np.sin(phase + phase_offsets[m])
            cx = e.cx + wobble * np.cos(dir_angles[m])
            cy = e.cy + wobble * np.sin(dir_angles[m])
            a, b = e.a, e.b
            if idx in _VENTRICLES:
                grow = 1.0 + dilation_amp * np.sin(phase + dilation_phases[_VENTRICLES.index(idx)])
                a, b = a * grow, b * grow
            table[idx] = EllipseSpec(cx, cy, a, b, e.angle, e.value)
        stack[t] = np.clip(render_ellipses(n, table), 0.0, 1.0)
    return DynamicSequence(frames=stack, period=period, seed=0 if seed is None else int(seed))


def phantom_suite(n: int, sequences: int, frames: int, period: int = 8,
                  motion_amp: float = 0.15, seed=0) -> list[DynamicSequence]:
    """Several dynamic sequences with independent motion draws from one seed."""
    rng = np.random.default_rng(seed)
    child_seeds = rng.integers(0, 2**63, size=sequences)
    return [
        dynamic_phantom(n, frames, period=period, motion_amp=motion_amp, seed=int(s))
        for s in child_seeds
    ]


@dataclass(frozen=True)
class TrainingSet:
    """Column-wise (aliased input, clean target) pairs under one fixed mask."""

    inputs: np.ndarray   # (n*n, N)
    targets: np.ndarray  # (n*n, N)
    mask_id: str


def build_training_set(sequences, mask: kspace.SamplingMask, noise_sigma: float = 0.0,
                       seed=0, mask_id: str | None = None) -> TrainingSet:
    """Acquire every frame through the mask and pair its aliased zero-filled
    image (vectorized row-major, clipped to [0, 1]) with the clean frame.

    Column order is shuffled deterministically by ``seed``; per-frame noise
    seeds derive from the same generator.
    """
    if isinstance(sequences, DynamicSequence):
        sequences = [sequences]
    all_frames = [seq.frames[t] for seq in sequences for t in range(len(seq))]
    if not all_frames:
        raise ValueError("no frames supplied")
    n = mask.n
    for frame in all_frames:
        if frame.shape != (n, n):
            raise ValueError(f"frame shape {frame.shape} does not match mask side {n}")

    rng = np.random.default_rng(seed)
    total = len(all_frames)
    frame_seeds = rng.integers(0, 2**63, size=total)
    perm = rng.permutation(total)

    d = n * n
    inputs = np.empty((d, total))
    targets = np.empty((d, total))
    for j, t in enumerate(perm):
        clean = all_frames[t]
        aliased = kspace.zero_filled(
            kspace.acquire(clean, mask, noise_sigma=noise_sigma, seed=int(frame_seeds[t])),
            mask,
        )
        inputs[:, j] = np.clip(aliased, 0.0, 1.0).ravel(order="C")
        targets[:, j] = clean.ravel(order="C")

    if mask_id is None:
        mask_id = f"mask-n{n}-f{mask.fraction:.4f}"
    return TrainingSet(inputs=inputs, targets=targets, mask_id=mask_id)
