"""Binary tensor files, plain-text metadata sidecars, and PGM images.

Tensor format ("MRT1"): magic bytes ``MRT1``, little-endian u32 rank,
u32 dims[rank], then a float64 little-endian row-major payload.  Complex
arrays are stored with one extra trailing dimension of size 2 holding the
real and imaginary parts.  Boolean masks are stored as 0.0/1.0 values.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

TENSOR_MAGIC = b"MRT1"
_MAX_RANK = 16


class FormatError(ValueError):
    """A binary or sidecar file does not match its declared format."""


def save_tensor(path, array) -> None:
    """Write a real or complex ndarray; complex data gains a trailing dim of 2."""
    arr = np.asarray(array)
    if np.iscomplexobj(arr):
        arr = np.stack([arr.real, arr.imag], axis=-1)
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.astype("<f8", copy=False).tobytes(order="C"))


def load_tensor(path, as_complex: bool = False) -> np.ndarray:
    """Read an MRT1 file; with ``as_complex`` the trailing dim of 2 is folded."""
    data = Path(path).read_bytes()
    offset = 0

    def take(nbytes: int, what: str) -> bytes:
        nonlocal offset
        if offset + nbytes > len(data):
            raise FormatError(
                f"{path}: truncated while reading {what} at byte offset {offset} "
                f"(needed {nbytes} bytes, file has {len(data)})"
            )
        chunk = data[offset:offset + nbytes]
        offset += nbytes
        return chunk

    magic = take(4, "magic")
    if magic != TENSOR_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}; expected {TENSOR_MAGIC!r}")
    (rank,) = struct.unpack("<I", take(4, "rank"))
    if not 1 <= rank <= _MAX_RANK:
        raise FormatError(f"{path}: implausible rank {rank} at byte offset 4")
    dims = struct.unpack(f"<{rank}I", take(4 * rank, "dims"))
    count = int(np.prod(dims, dtype=np.int64))
    payload = take(8 * count, "payload")
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes at offset {offset}")
    arr = np.frombuffer(payload, dtype="<f8").reshape(dims).astype(np.float64)
    if as_complex:
        if arr.shape[-1] != 2:
            raise FormatError(
                f"{path}: complex tensor requires a trailing dimension of 2, got {arr.shape}"
            )
        arr = arr[..., 0] + 1j * arr[..., 1]
    return arr


def write_metadata(path, entries: dict) -> None:
    """key=value sidecar, one entry per line."""
    lines = [f"{key}={value}" for key, value in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_metadata(path) -> dict:
    entries = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def write_pgm(path, image) -> None:
    """8-bit binary PGM; [0, 1] maps linearly onto 0..255."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"PGM output needs a 2-D image, got shape {img.shape}")
    levels = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(levels.tobytes(order="C"))
