"""Stacked denoising autoencoder: layer math, greedy layer-wise training,
full-stack inference, and the binary model format.

Each layer holds an analysis (encoder) matrix acting on bias-augmented
input and a bias-free linear synthesis (decoder) matrix.  The stack is
trained greedily: the outermost layer learns to map aliased images to clean
ones; every deeper layer is a plain autoencoder on the previous layer's
sigmoid features, with an l1 sparsity penalty (smoothed so it stays
differentiable) applied to the deepest layer's pre-activation codes only.
There is no end-to-end fine-tuning pass; different depths are trained as
separate models.
"""

from __future__ import annotations

import csv
import struct
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels

MODEL_MAGIC = b"SDAE"
MODEL_VERSION = 1


class TrainingError(RuntimeError):
    """Raised when optimization produces a non-finite cost."""


class ModelFormatError(ValueError):
    """A model file does not match the on-disk format."""


# architecture table: hidden sizes shrink 4x per stage; at n=100 the sizes
# 2500/625/144/36 are used so the third stage stays a perfect square
_HIDDEN_AT_100 = (2500, 625, 144, 36)
MAX_DEPTH = 4


def architecture_dims(n: int, depth: int) -> list[int]:
    """Layer widths [d, h_1, .., h_depth] for an n x n image."""
    if not 1 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in 1..{MAX_DEPTH}, got {depth}")
    d = n * n
    if n == 100:
        hidden = _HIDDEN_AT_100[:depth]
    else:
        hidden = []
        size = d
        for _ in range(depth):
            size = max(1, size // 4)
            hidden.append(size)
    return [d, *hidden]


@dataclass
class Layer:
    """analysis: (h, d+1) encoder weights with trailing bias column;
    synthesis: (d, h) linear decoder weights."""

    analysis: np.ndarray
    synthesis: np.ndarray

    def __post_init__(self):
        a, s = np.asarray(self.analysis, float), np.asarray(self.synthesis, float)
        if a.ndim != 2 or s.ndim != 2 or a.shape[0] != s.shape[1] or a.shape[1] != s.shape[0] + 1:
            raise ValueError(
                f"inconsistent layer shapes: analysis {a.shape}, synthesis {s.shape}"
            )
        if not (np.isfinite(a).all() and np.isfinite(s).all()):
            raise ValueError("layer weights must be finite")
        self.analysis, self.synthesis = a, s

    @property
    def in_dim(self) -> int:
        return self.analysis.shape[1] - 1

    @property
    def hidden_dim(self) -> int:
        return self.analysis.shape[0]


@dataclass
class SdaeModel:
    """Trained stack, outermost layer first; dims = [d, h_1, .., h_L]."""

    layers: list[Layer]
    dims: list[int]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("model needs at least one layer")
        expected = [self.layers[0].in_dim] + [lay.hidden_dim for lay in self.layers]
        if list(self.dims) != expected:
            raise ValueError(f"dims {self.dims} do not match layer shapes {expected}")
        if any(a <= b for a, b in zip(self.dims, self.dims[1:])):
            raise ValueError(f"dims must be strictly decreasing, got {self.dims}")
        for k, lay in enumerate(self.layers):
            if lay.in_dim != self.dims[k]:
                raise ValueError(f"layer {k} expects input dim {lay.in_dim}, dims say {self.dims[k]}")

    @property
    def depth(self) -> int:
        return len(self.layers)


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 200
    batch_size: int = 64
    lambda_sparse: float = 0.001  # deepest layer only
    smooth_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lambda_sparse < 0.0:
            raise ValueError("lambda_sparse must be >= 0")
        if self.smooth_eps <= 0.0:
            raise ValueError("smooth_eps must be > 0")


@dataclass
class TrainReport:
    """Per-epoch costs: ``train_cost[e]`` is the mean per-sample mini-batch
    cost observed during epoch e (each sample counted once), ``val_cost[e]``
    a full validation pass after the epoch's updates."""

    train_cost: np.ndarray
    val_cost: np.ndarray  # NaN entries when no validation split was given
    seconds: float


@dataclass
class OpCounter:
    """Counts the dense products and activations used by :func:`reconstruct`."""

    matvecs: int = 0
    sigmoids: int = 0


def sigmoid(t):
    """Logistic function 1 / (1 + exp(-t)), overflow-safe elementwise."""
    out = kernels.sigmoid(t)
    return out.item() if np.isscalar(t) or np.ndim(t) == 0 else out


def _augment(x: np.ndarray) -> np.ndarray:
    ones = np.ones((1, x.shape[1]), dtype=np.float64)
    return np.concatenate([x, ones], axis=0)


def _as_columns(x, dim: int | None = None) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    was_vector = arr.ndim == 1
    if was_vector:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"expected a vector or a (d, N) matrix, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"input dim {arr.shape[0]} does not match layer dim {dim}")
    return arr, was_vector


def encode_layer(x, layer: Layer):
    """sigmoid(analysis @ [x; 1]); accepts one vector or a column matrix."""
    arr, was_vector = _as_columns(x, layer.in_dim)
    codes = kernels.sigmoid(layer.analysis @ _augment(arr))
    return codes[:, 0] if was_vector else codes


def decode_layer(codes, layer: Layer):
    """Linear map synthesis @ codes (the data space is unconstrained)."""
    arr, was_vector = _as_columns(codes, layer.hidden_dim)
    out = layer.synthesis @ arr
    return out[:, 0] if was_vector else out


def _smooth_abs(z: np.ndarray, eps: float) -> np.ndarray:
    return np.sqrt(z * z + eps * eps)


def _forward(analysis, synthesis, x_aug, sigmoid_decode: bool = False):
    z = analysis @ x_aug
    h = kernels.sigmoid(z)
    out = synthesis @ h
    if sigmoid_decode:
        out = kernels.sigmoid(out)
    return z, h, out


def _cost_raw(analysis, synthesis, x_aug, x_target, lam, eps,
              sigmoid_decode: bool = False) -> float:
    z, _, recon = _forward(analysis, synthesis, x_aug, sigmoid_decode)
    residual = x_target - recon
    cost = float(np.sum(residual * residual))
    if lam > 0.0:
        cost += lam * float(np.sum(_smooth_abs(z, eps)))
    return cost


def _gradients_raw(analysis, synthesis, x_aug, x_target, lam, eps,
                   sigmoid_decode: bool = False):
    z, h, recon = _forward(analysis, synthesis, x_aug, sigmoid_decode)
    residual = x_target - recon
    d_out = -2.0 * residual
    if sigmoid_decode:
        d_out = d_out * recon * (1.0 - recon)
    grad_synthesis = d_out @ h.T
    back = (synthesis.T @ d_out) * h * (1.0 - h)
    if lam > 0.0:
        back = back + lam * z / _smooth_abs(z, eps)
    grad_analysis = back @ x_aug.T
    batch_cost = float(np.sum(residual * residual))
    if lam > 0.0:
        batch_cost += lam * float(np.sum(_smooth_abs(z, eps)))
    return grad_analysis, grad_synthesis, batch_cost


def layer_cost(x_in, x_target, layer: Layer, lam: float = 0.0, eps: float = 1e-8) -> float:
    """Squared Frobenius reconstruction error plus the smoothed-l1 penalty
    ``lam * sum(sqrt(z^2 + eps^2))`` on the pre-activation codes z."""
    xin, _ = _as_columns(x_in, layer.in_dim)
    xt, _ = _as_columns(x_target, layer.synthesis.shape[0])
    if xin.shape[1] != xt.shape[1]:
        raise ValueError(f"column counts differ: {xin.shape[1]} vs {xt.shape[1]}")
    return _cost_raw(layer.analysis, layer.synthesis, _augment(xin), xt, lam, eps)


def layer_gradients(x_in, x_target, layer: Layer, lam: float = 0.0, eps: float = 1e-8):
    """Exact gradients of :func:`layer_cost` w.r.t. (analysis, synthesis)."""
    xin, _ = _as_columns(x_in, layer.in_dim)
    xt, _ = _as_columns(x_target, layer.synthesis.shape[0])
    if xin.shape[1] != xt.shape[1]:
        raise ValueError(f"column counts differ: {xin.shape[1]} vs {xt.shape[1]}")
    ga, gs, _ = _gradients_raw(layer.analysis, layer.synthesis, _augment(xin), xt, lam, eps)
    return ga, gs


def _glorot(rng, rows, cols):
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def train_layer(x_in, x_target, hidden: int, config: TrainConfig,
                x_val_in=None, x_val_target=None,
                sigmoid_decode: bool = False) -> tuple[Layer, TrainReport]:
    """Mini-batch gradient descent with momentum on the layer cost.

    Weights start Glorot-uniform; batch order is a fresh seeded permutation
    per epoch, so a fixed config reproduces the final weights bit-for-bit.
    With ``sigmoid_decode`` the decoder output passes through a sigmoid,
    which :func:`stack_train` uses for the feature-space layers.
    """
    xin, _ = _as_columns(x_in)
    xt, _ = _as_columns(x_target)
    n_cols = xin.shape[1]
    if xt.shape[1] != n_cols:
        raise ValueError(f"column counts differ: {n_cols} vs {xt.shape[1]}")
    if n_cols < config.batch_size:
        raise ValueError(f"need at least batch_size={config.batch_size} columns, got {n_cols}")
    has_val = x_val_in is not None
    if has_val:
        xv, _ = _as_columns(x_val_in, xin.shape[0])
        xvt, _ = _as_columns(x_val_target, xt.shape[0])
        xv_aug = _augment(xv)

    rng = np.random.default_rng(config.seed)
    analysis = _glorot(rng, hidden, xin.shape[0] + 1)
    synthesis = _glorot(rng, xt.shape[0], hidden)
    vel_a = np.zeros_like(analysis)
    vel_s = np.zeros_like(synthesis)

    x_aug = _augment(xin)
    lam, eps = config.lambda_sparse, config.smooth_eps
    train_costs = np.empty(config.epochs)
    val_costs = np.full(config.epochs, np.nan)

    started = time.perf_counter()
    # overflow on a diverging run is reported via TrainingError, not warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            order = rng.permutation(n_cols)
            epoch_cost = 0.0
            for start in range(0, n_cols, config.batch_size):
                idx = order[start:start + config.batch_size]
                ga, gs, batch_cost = _gradients_raw(
                    analysis, synthesis, x_aug[:, idx], xt[:, idx], lam, eps, sigmoid_decode,
                )
                epoch_cost += batch_cost
                scale = config.learning_rate / idx.size
                vel_a = config.momentum * vel_a - scale * ga
                vel_s = config.momentum * vel_s - scale * gs
                analysis = analysis + vel_a
                synthesis = synthesis + vel_s
            train_costs[epoch] = epoch_cost / n_cols
            if not np.isfinite(train_costs[epoch]):
                raise TrainingError(f"training diverged at epoch {epoch}: cost is not finite")
            if has_val:
                val_costs[epoch] = _cost_raw(
                    analysis, synthesis, xv_aug, xvt, lam, eps, sigmoid_decode,
                ) / xv.shape[1]
    seconds = time.perf_counter() - started

    layer = Layer(analysis=analysis, synthesis=synthesis)
    return layer, TrainReport(train_cost=train_costs, val_cost=val_costs, seconds=seconds)


def split_train_val(inputs, targets, val_fraction: float = 0.1, seed=0):
    """Deterministic column split into ((in, tgt), (val_in, val_tgt))."""
    n_cols = inputs.shape[1]
    n_val = int(round(val_fraction * n_cols))
    order = np.random.default_rng(seed).permutation(n_cols)
    val_idx, train_idx = order[:n_val], order[n_val:]
    return (inputs[:, train_idx], targets[:, train_idx]), (inputs[:, val_idx], targets[:, val_idx])


def stack_train(train_set, dims, config: TrainConfig,
                val_fraction: float = 0.1) -> tuple[SdaeModel, list[TrainReport]]:
    """Greedy layer-wise training of the full stack.

    ``train_set`` is anything with (d, N) ``inputs`` (aliased) and
    ``targets`` (clean) attributes, or a plain (inputs, targets) pair.
    Layer 1 is trained to denoise with a linear decoder (the data space is
    real-valued); layers 2..L auto-encode the running sigmoid features of
    the aliased branch with a sigmoid decoder, matching the (0, 1) feature
    range and the sigmoid placed between synthesis stages at inference.
    Only the deepest layer gets ``config.lambda_sparse``.
    """
    if hasattr(train_set, "inputs"):
        inputs, targets = train_set.inputs, train_set.targets
    else:
        inputs, targets = train_set
    dims = [int(v) for v in dims]
    if len(dims) < 2:
        raise ValueError("dims must list the input width and at least one hidden width")
    if inputs.shape[0] != dims[0]:
        raise ValueError(f"dims[0]={dims[0]} does not match data dim {inputs.shape[0]}")
    if any(a <= b for a, b in zip(dims, dims[1:])):
        raise ValueError(f"dims must be strictly decreasing, got {dims}")
    depth = len(dims) - 1

    seed_stream = np.random.SeedSequence(config.seed).generate_state(depth + 1)
    (x_tr, t_tr), (x_val, t_val) = split_train_val(
        inputs, targets, val_fraction=val_fraction, seed=int(seed_stream[0])
    )
    has_val = x_val.shape[1] > 0

    layers: list[Layer] = []
    reports: list[TrainReport] = []
    feats_tr, feats_val = x_tr, x_val
    target_tr, target_val = t_tr, t_val
    for level in range(1, depth + 1):
        lam = config.lambda_sparse if level == depth else 0.0
        level_cfg = replace(config, lambda_sparse=lam, seed=int(seed_stream[level]))
        layer, report = train_layer(
            feats_tr, target_tr, dims[level], level_cfg,
            x_val_in=feats_val if has_val else None,
            x_val_target=target_val if has_val else None,
            sigmoid_decode=level > 1,
        )
        layers.append(layer)
        reports.append(report)
        if level < depth:
            feats_tr = encode_layer(feats_tr, layer)
            feats_val = encode_layer(feats_val, layer) if has_val else feats_val
            target_tr, target_val = feats_tr, feats_val
    return SdaeModel(layers=layers, dims=dims), reports


def _matvec(matrix, vector, counter: OpCounter | None):
    if counter is not None:
        counter.matvecs += 1
    return matrix @ vector


def _activate(vector, counter: OpCounter | None):
    if counter is not None:
        counter.sigmoids += 1
    return kernels.sigmoid(vector)


def reconstruct(model: SdaeModel, aliased, counter: OpCounter | None = None) -> np.ndarray:
    """Run one aliased image through the stack: 2L matrix-vector products and
    2L - 1 elementwise sigmoids, output clipped to [0, 1].

    Encoding applies every analysis map with sigmoid; decoding applies the
    synthesis maps deepest-first with sigmoid between stages and a linear
    final stage.
    """
    vec = np.asarray(aliased, dtype=np.float64).reshape(-1)
    if vec.size != model.dims[0]:
        raise ValueError(
            f"image has {vec.size} pixels but the model expects {model.dims[0]}"
        )
    h = vec
    for layer in model.layers:
        h = _activate(_matvec(layer.analysis, np.append(h, 1.0), counter), counter)
    for layer in model.layers[:0:-1]:
        h = _activate(_matvec(layer.synthesis, h, counter), counter)
    out = _matvec(model.layers[0].synthesis, h, counter)
    np.clip(out, 0.0, 1.0, out=out)
    n = int(round(np.sqrt(model.dims[0])))
    return out.reshape(n, n)


# ---------------------------------------------------------------------------
# model serialization: magic "SDAE", u32 version, u32 layer count, then per
# layer u32 rows/cols + row-major float64 LE payload for analysis, then the
# same for synthesis
# ---------------------------------------------------------------------------

def save_model(path, model: SdaeModel) -> None:
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, model.depth))
        for layer in model.layers:
            for mat in (layer.analysis, layer.synthesis):
                fh.write(struct.pack("<II", mat.shape[0], mat.shape[1]))
                fh.write(np.ascontiguousarray(mat, dtype="<f8").tobytes(order="C"))


def load_model(path) -> SdaeModel:
    data = Path(path).read_bytes()
    offset = 0

    def take(nbytes: int, what: str) -> bytes:
        nonlocal offset
        if offset + nbytes > len(data):
            raise ModelFormatError(
                f"{path}: truncated while reading {what} at byte offset {offset} "
                f"(needed {nbytes} bytes, file has {len(data)})"
            )
        chunk = data[offset:offset + nbytes]
        offset += nbytes
        return chunk

    magic = take(4, "magic")
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}; expected {MODEL_MAGIC!r}")
    version, depth = struct.unpack("<II", take(8, "header"))
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    if not 1 <= depth <= 64:
        raise ModelFormatError(f"{path}: implausible layer count {depth}")

    layers = []
    for k in range(depth):
        mats = []
        for name in ("analysis", "synthesis"):
            rows, cols = struct.unpack("<II", take(8, f"layer {k} {name} shape"))
            payload = take(8 * rows * cols, f"layer {k} {name} payload")
            mats.append(np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy())
        try:
            layers.append(Layer(analysis=mats[0], synthesis=mats[1]))
        except ValueError as exc:
            raise ModelFormatError(f"{path}: layer {k}: {exc}") from exc
    if offset != len(data):
        raise ModelFormatError(f"{path}: {len(data) - offset} trailing bytes at offset {offset}")

    dims = [layers[0].in_dim] + [lay.hidden_dim for lay in layers]
    try:
        return SdaeModel(layers=layers, dims=dims)
    except ValueError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc


def write_train_report(path, report: TrainReport) -> None:
    """CSV with one row per epoch: epoch, train_cost, val_cost."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_cost", "val_cost"])
        for epoch, (tc, vc) in enumerate(zip(report.train_cost, report.val_cost)):
            writer.writerow([epoch, format(tc, ".12g"), format(vc, ".12g")])
