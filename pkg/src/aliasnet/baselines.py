"""Online reconstruction baselines: the zero-filled adjoint and a
frame-differencing compressed-sensing solver (proximal gradient / ISTA on
the sparse difference between consecutive frames).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels, kspace, sdae

METHODS = ("zero_filled", "diff_cs", "sdae")


class SolverError(RuntimeError):
    """Raised when an iterative solve produces a non-finite objective."""


@dataclass(frozen=True)
class IstaConfig:
    """lam: l1 weight on the frame difference; step in (0, 1] is safe because
    the masked orthonormal operator has spectral norm <= 1."""

    lam: float = 0.01
    max_iters: int = 50
    tol: float = 1e-6
    step: float = 1.0

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0.0:
            raise ValueError("tol must be >= 0")
        if not 0.0 < self.step <= 1.0:
            raise ValueError("step must lie in (0, 1]")


@dataclass
class FrameEstimate:
    image: np.ndarray
    objective_trace: np.ndarray
    iters_used: int
    latency_s: float = field(default=0.0)


def soft_threshold(values, tau: float):
    """sign(v) * max(|v| - tau, 0); scalars in, scalar out."""
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    out = kernels.soft_threshold(values, tau)
    return out.item() if np.isscalar(values) or np.ndim(values) == 0 else out


def differential_cs(kspace_frame, previous_image, mask: kspace.SamplingMask,
                    config: IstaConfig = IstaConfig()) -> FrameEstimate:
    """Recover the current frame as previous + sparse difference.

    ISTA iterations on the difference d, starting from d = 0::

        d <- soft_threshold(d + step * Re[A^H (y - A(prev + d))], step * lam / 2)

    with A the masked orthonormal DFT.  The recorded objective is
    ``||y - A(prev + d)||^2 + lam * ||d||_1`` evaluated after every update;
    with step <= 1 it never increases.  Stops once the relative objective
    change drops below ``tol`` or after ``max_iters``.
    """
    y = np.asarray(kspace_frame, dtype=np.complex128)
    prev = np.asarray(previous_image, dtype=np.float64)
    if y.shape != prev.shape or prev.shape != (mask.n, mask.n):
        raise ValueError(
            f"shape mismatch: frame {y.shape}, previous {prev.shape}, mask {(mask.n, mask.n)}"
        )
    if not np.isfinite(prev).all():
        raise ValueError("previous_image must be finite")

    keep = mask.keep
    diff = np.zeros_like(prev)

    def masked_residual(d):
        return y - np.where(keep, kspace.dft2(prev + d), 0.0 + 0.0j)

    def objective(residual, d) -> float:
        value = float(np.vdot(residual, residual).real)
        if config.lam > 0.0:
            value += config.lam * float(np.abs(d).sum())
        return value

    residual = masked_residual(diff)
    trace = [objective(residual, diff)]
    iters_used = 0
    threshold = config.step * config.lam / 2.0
    for _ in range(config.max_iters):
        gradient_step = kspace.idft2(np.where(keep, residual, 0.0 + 0.0j)).real
        diff = kernels.soft_threshold(diff + config.step * gradient_step, threshold)
        residual = masked_residual(diff)
        value = objective(residual, diff)
        if not np.isfinite(value):
            raise SolverError(f"objective became non-finite at iteration {iters_used + 1}")
        previous_value = trace[-1]
        trace.append(value)
        iters_used += 1
        if abs(previous_value - value) <= config.tol * max(abs(previous_value), 1e-30):
            break

    image = np.clip(prev + diff, 0.0, 1.0)
    return FrameEstimate(image=image, objective_trace=np.asarray(trace), iters_used=iters_used)


def online_reconstruct(frames, mask: kspace.SamplingMask, method: str,
                       config: IstaConfig | None = None,
                       model: "sdae.SdaeModel | None" = None) -> list[FrameEstimate]:
    """Causal sweep over k-space frames: the estimate for frame t uses only
    frames up to t.  Per-frame wall-clock latency is recorded on each
    estimate.

    * ``zero_filled``: independent adjoint reconstruction per frame.
    * ``diff_cs``: frame 0 starts from its own zero-filled image; later
      frames difference against the previous estimate.
    * ``sdae``: the trained model maps each zero-filled frame independently.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "sdae" and model is None:
        raise ValueError("method 'sdae' needs a model")
    if method == "diff_cs" and config is None:
        config = IstaConfig()

    total = len(frames)
    if total == 0:
        raise ValueError("no frames supplied")

    estimates: list[FrameEstimate] = []
    empty = np.empty(0)
    for t in range(total):
        frame = frames[t]
        started = time.perf_counter()
        try:
            if method == "zero_filled":
                est = FrameEstimate(kspace.zero_filled(frame, mask), empty, 0)
            elif method == "sdae":
                image = sdae.reconstruct(model, kspace.zero_filled(frame, mask))
                est = FrameEstimate(image, empty, 0)
            else:
                prev = estimates[-1].image if estimates else kspace.zero_filled(frame, mask)
                est = differential_cs(frame, prev, mask, config)
        except SolverError as exc:
            raise SolverError(f"frame {t}: {exc}") from exc
        est.latency_s = time.perf_counter() - started
        estimates.append(est)
    return estimates
