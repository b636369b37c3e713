"""Unitary 2-D Fourier transforms, k-space sampling masks, and the
undersampled acquisition operator with its zero-filled adjoint.

Conventions
-----------
* The DFT pair is orthonormal (``norm="ortho"``), so the masked acquisition
  operator has spectral norm exactly 1 and a gradient step of 1 is safe for
  the proximal solvers built on top of it.
* Arrays follow the unshifted FFT layout: the zero-frequency (DC) sample
  lives at index ``[0, 0]``.  Mask constructors work in centered coordinates
  and are ``ifftshift``-ed into this layout.
* All randomness is drawn from ``numpy.random.default_rng`` (PCG64), so any
  fixed seed reproduces masks and noise bit-for-bit across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensorio


@dataclass(frozen=True)
class SamplingMask:
    """Boolean k-space sampling pattern with its cached sampled fraction."""

    keep: np.ndarray
    fraction: float

    @classmethod
    def from_array(cls, keep) -> "SamplingMask":
        keep = np.ascontiguousarray(keep, dtype=bool)
        if keep.ndim != 2 or keep.shape[0] != keep.shape[1]:
            raise ValueError(f"mask must be square, got shape {keep.shape}")
        if not keep[0, 0]:
            raise ValueError("the DC position (index [0, 0]) must be sampled")
        fraction = float(keep.mean())
        keep.setflags(write=False)
        return cls(keep=keep, fraction=fraction)

    @property
    def n(self) -> int:
        return self.keep.shape[0]


def _as_square_grid(array, name: str) -> np.ndarray:
    arr = np.asarray(array)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
        raise ValueError(f"{name} must be a square n x n grid with n >= 2, got shape {arr.shape}")
    return arr


def dft2(image) -> np.ndarray:
    """Orthonormal 2-D DFT; preserves the l2 norm of its input."""
    arr = _as_square_grid(image, "image")
    return np.fft.fft2(arr, norm="ortho")


def idft2(grid) -> np.ndarray:
    """Inverse (= adjoint) of :func:`dft2`."""
    arr = _as_square_grid(grid, "grid")
    return np.fft.ifft2(arr, norm="ortho")


def _centered_radii(n: int) -> np.ndarray:
    # distances from the centered DC position (n // 2 after fftshift)
    idx = np.arange(n, dtype=np.float64) - n // 2
    return np.hypot(idx[:, None], idx[None, :])


def mask_variable_density(n: int, target_fraction: float, decay: float = 6.0,
                          seed=None) -> SamplingMask:
    """Random mask whose sampling probability decays away from the k-space center.

    Each position is kept independently with probability proportional to
    ``(1 + r / r_max) ** -decay`` (``r`` = distance from DC), rescaled so the
    expected kept fraction equals ``target_fraction`` after clipping
    probabilities at 1.  The DC sample is always kept.
    """
    if not 0.0 < target_fraction <= 1.0:
        raise ValueError(f"target_fraction must lie in (0, 1], got {target_fraction}")
    if decay < 0.0:
        raise ValueError(f"decay must be >= 0, got {decay}")
    if target_fraction == 1.0:
        return SamplingMask.from_array(np.ones((n, n), dtype=bool))

    radii = _centered_radii(n)
    weights = (1.0 + radii / radii.max()) ** (-decay)

    def expected(scale: float) -> float:
        return float(np.minimum(scale * weights, 1.0).mean())

    lo, hi = 0.0, 1.0
    while expected(hi) < target_fraction:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if expected(mid) < target_fraction:
            lo = mid
        else:
            hi = mid
    probs = np.minimum(hi * weights, 1.0)

    rng = np.random.default_rng(seed)
    keep = rng.random((n, n)) < probs
    keep = np.fft.ifftshift(keep)
    keep[0, 0] = True
    return SamplingMask.from_array(keep)


def mask_radial(n: int, num_lines: int, seed=None, angle_jitter: float = 0.0) -> SamplingMask:
    """Straight lines through DC at angles ``i * pi / num_lines``.

    Lines are rasterized by stepping along each one in 0.5-pixel increments
    and rounding to the nearest grid point, which keeps every kept sample
    within ``sqrt(2)/2`` pixels of its ideal line.  Deterministic unless
    ``angle_jitter`` (radians, drawn per line from the seeded generator) is
    enabled.
    """
    if num_lines < 1:
        raise ValueError(f"num_lines must be >= 1, got {num_lines}")
    angles = np.pi * np.arange(num_lines) / num_lines
    if angle_jitter > 0.0:
        rng = np.random.default_rng(seed)
        angles = angles + rng.uniform(-angle_jitter, angle_jitter, size=num_lines)

    center = n // 2
    steps = np.arange(-n, n + 0.5, 0.5)
    keep = np.zeros((n, n), dtype=bool)
    for theta in angles:
        rows = np.rint(center + steps * np.sin(theta)).astype(np.int64)
        cols = np.rint(center + steps * np.cos(theta)).astype(np.int64)
        valid = (rows >= 0) & (rows < n) & (cols >= 0) & (cols < n)
        keep[rows[valid], cols[valid]] = True
    keep = np.fft.ifftshift(keep)
    keep[0, 0] = True
    return SamplingMask.from_array(keep)


def mask_uniform(n: int, factor: int) -> SamplingMask:
    """Keep every ``factor``-th k-space row (all columns), DC row included."""
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if n % factor != 0:
        raise ValueError(f"factor {factor} does not divide n={n}")
    keep = np.zeros((n, n), dtype=bool)
    keep[::factor, :] = True
    return SamplingMask.from_array(keep)


def acquire(image, mask: SamplingMask, noise_sigma: float = 0.0, seed=None) -> np.ndarray:
    """Simulate one undersampled k-space acquisition of a real image.

    Returns the masked orthonormal spectrum with circular complex Gaussian
    noise (standard deviation ``noise_sigma`` per real component) added on
    the sampled positions only; unsampled positions are exactly zero.
    """
    arr = _as_square_grid(image, "image")
    if arr.shape[0] != mask.n:
        raise ValueError(f"image side {arr.shape[0]} does not match mask side {mask.n}")
    if noise_sigma < 0.0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    spectrum = dft2(arr)
    frame = np.where(mask.keep, spectrum, 0.0 + 0.0j)
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        count = int(mask.keep.sum())
        noise = noise_sigma * rng.standard_normal((count, 2))
        frame[mask.keep] += noise[:, 0] + 1j * noise[:, 1]
    return frame


def zero_filled(kspace_frame, mask: SamplingMask) -> np.ndarray:
    """Magnitude of the adjoint transform applied to the masked data.

    This is the fastest possible inversion; undersampling makes it aliased
    (coherent ghosts for periodic masks, noise-like texture for random ones).
    """
    frame = _as_square_grid(kspace_frame, "kspace_frame")
    if frame.shape[0] != mask.n:
        raise ValueError(f"frame side {frame.shape[0]} does not match mask side {mask.n}")
    return np.abs(idft2(np.where(mask.keep, frame, 0.0 + 0.0j)))


def save_mask(path, mask: SamplingMask) -> None:
    tensorio.save_tensor(path, mask.keep.astype(np.float64))


def load_mask(path) -> SamplingMask:
    values = tensorio.load_tensor(path)
    if values.ndim != 2 or not np.isin(values, (0.0, 1.0)).all():
        raise tensorio.FormatError(f"{path}: mask tensors must be 2-D with 0.0/1.0 entries")
    return SamplingMask.from_array(values > 0.5)
