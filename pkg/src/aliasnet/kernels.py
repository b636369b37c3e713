"""Accelerated inner loops with interchangeable numba / pure-NumPy backends.

The hot scalar loops of the package (ellipse rasterization, windowed SSIM
statistics, elementwise sigmoid and soft-thresholding) are compiled with
numba when it is available.  Setting the environment variable
``ALIASNET_NO_NUMBA=1`` before import forces the pure-NumPy fallbacks, which
compute the same values.  Dense matrix products and FFTs are deliberately
left to NumPy/BLAS, which outperforms jitted loops for those shapes.

Both backends of every kernel are importable (``*_numpy`` / ``*_numba``) so
they can be cross-checked and benchmarked against each other; the unsuffixed
names dispatch to the active backend.  ``benchmarks/bench_kernels.py``
compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _numba_disabled() -> bool:
    return os.environ.get("ALIASNET_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and not _numba_disabled()
BACKEND = "numba" if USING_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy backends
# ---------------------------------------------------------------------------

def _sigmoid_flat_numpy(x):
    # split by sign so exp() never overflows
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _soft_threshold_flat_numpy(x, tau):
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def _render_ellipses_numpy(xs, ys, params):
    img = np.zeros((ys.size, xs.size))
    dy_all = ys[:, None]
    dx_all = xs[None, :]
    for k in range(params.shape[0]):
        cx, cy, a, b, ct, st, val = params[k]
        inv_a2 = 1.0 / (a * a)
        inv_b2 = 1.0 / (b * b)
        dx = dx_all - cx
        dy = dy_all - cy
        u = dx * ct + dy * st
        v = -dx * st + dy * ct
        inside = u * u * inv_a2 + v * v * inv_b2 <= 1.0
        img[inside] += val
    return img


def _ssim_map_numpy(p1, p2, win, c1, c2):
    w = win.shape[0]
    nr = p1.shape[0] - w + 1
    nc = p1.shape[1] - w + 1
    m1 = np.zeros((nr, nc))
    m2 = np.zeros((nr, nc))
    s11 = np.zeros((nr, nc))
    s22 = np.zeros((nr, nc))
    s12 = np.zeros((nr, nc))
    for a in range(w):
        for b in range(w):
            wt = win[a, b]
            v1 = p1[a:a + nr, b:b + nc]
            v2 = p2[a:a + nr, b:b + nc]
            m1 += wt * v1
            m2 += wt * v2
            s11 += wt * v1 * v1
            s22 += wt * v2 * v2
            s12 += wt * v1 * v2
    num = (2.0 * m1 * m2 + c1) * (2.0 * (s12 - m1 * m2) + c2)
    den = (m1 * m1 + m2 * m2 + c1) * ((s11 - m1 * m1) + (s22 - m2 * m2) + c2)
    return num / den


# ---------------------------------------------------------------------------
# numba backends (same accumulation order as the numpy versions, so the two
# paths agree bit-for-bit wherever no transcendental is involved)
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit("float64[::1](float64[::1])", cache=True)
    def _sigmoid_flat_numba(x):
        out = np.empty_like(x)
        for i in range(x.size):
            t = x[i]
            if t >= 0.0:
                out[i] = 1.0 / (1.0 + math.exp(-t))
            else:
                e = math.exp(t)
                out[i] = e / (1.0 + e)
        return out

    @njit("float64[::1](float64[::1], float64)", cache=True)
    def _soft_threshold_flat_numba(x, tau):
        out = np.empty_like(x)
        for i in range(x.size):
            v = x[i]
            m = abs(v) - tau
            if m <= 0.0:
                out[i] = 0.0
            elif v > 0.0:
                out[i] = m
            else:
                out[i] = -m
        return out

    @njit("float64[:, ::1](float64[::1], float64[::1], float64[:, ::1])", cache=True)
    def _render_ellipses_numba(xs, ys, params):
        img = np.zeros((ys.size, xs.size))
        for k in range(params.shape[0]):
            cx = params[k, 0]
            cy = params[k, 1]
            a = params[k, 2]
            b = params[k, 3]
            ct = params[k, 4]
            st = params[k, 5]
            val = params[k, 6]
            inv_a2 = 1.0 / (a * a)
            inv_b2 = 1.0 / (b * b)
            for i in range(ys.size):
                dy = ys[i] - cy
                for j in range(xs.size):
                    dx = xs[j] - cx
                    u = dx * ct + dy * st
                    v = -dx * st + dy * ct
                    if u * u * inv_a2 + v * v * inv_b2 <= 1.0:
                        img[i, j] += val
        return img

    @njit(
        "float64[:, ::1](float64[:, ::1], float64[:, ::1], float64[:, ::1], float64, float64)",
        cache=True,
    )
    def _ssim_map_numba(p1, p2, win, c1, c2):
        w = win.shape[0]
        nr = p1.shape[0] - w + 1
        nc = p1.shape[1] - w + 1
        out = np.empty((nr, nc))
        for i in range(nr):
            for j in range(nc):
                m1 = 0.0
                m2 = 0.0
                s11 = 0.0
                s22 = 0.0
                s12 = 0.0
                for a in range(w):
                    for b in range(w):
                        wt = win[a, b]
                        v1 = p1[i + a, j + b]
                        v2 = p2[i + a, j + b]
                        m1 += wt * v1
                        m2 += wt * v2
                        s11 += wt * v1 * v1
                        s22 += wt * v2 * v2
                        s12 += wt * v1 * v2
                num = (2.0 * m1 * m2 + c1) * (2.0 * (s12 - m1 * m2) + c2)
                den = (m1 * m1 + m2 * m2 + c1) * ((s11 - m1 * m1) + (s22 - m2 * m2) + c2)
                out[i, j] = num / den
        return out

else:  # pragma: no cover
    _sigmoid_flat_numba = None
    _soft_threshold_flat_numba = None
    _render_ellipses_numba = None
    _ssim_map_numba = None


# ---------------------------------------------------------------------------
# public wrappers: dtype/contiguity coercion plus backend dispatch
# ---------------------------------------------------------------------------

def _flat64(x):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    return arr, arr.reshape(-1)


def sigmoid_numpy(x):
    arr, flat = _flat64(x)
    return _sigmoid_flat_numpy(flat).reshape(arr.shape)


def sigmoid_numba(x):
    arr, flat = _flat64(x)
    return _sigmoid_flat_numba(flat).reshape(arr.shape)


def soft_threshold_numpy(x, tau):
    arr, flat = _flat64(x)
    return _soft_threshold_flat_numpy(flat, float(tau)).reshape(arr.shape)


def soft_threshold_numba(x, tau):
    arr, flat = _flat64(x)
    return _soft_threshold_flat_numba(flat, float(tau)).reshape(arr.shape)


def render_ellipses_numpy(xs, ys, params):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    params = np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 7)
    return _render_ellipses_numpy(xs, ys, params)


def render_ellipses_numba(xs, ys, params):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    params = np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 7)
    return _render_ellipses_numba(xs, ys, params)


def ssim_map_numpy(padded1, padded2, window, c1, c2):
    p1 = np.ascontiguousarray(padded1, dtype=np.float64)
    p2 = np.ascontiguousarray(padded2, dtype=np.float64)
    win = np.ascontiguousarray(window, dtype=np.float64)
    return _ssim_map_numpy(p1, p2, win, float(c1), float(c2))


def ssim_map_numba(padded1, padded2, window, c1, c2):
    p1 = np.ascontiguousarray(padded1, dtype=np.float64)
    p2 = np.ascontiguousarray(padded2, dtype=np.float64)
    win = np.ascontiguousarray(window, dtype=np.float64)
    return _ssim_map_numba(p1, p2, win, float(c1), float(c2))


if USING_NUMBA:
    sigmoid = sigmoid_numba
    soft_threshold = soft_threshold_numba
    render_ellipses = render_ellipses_numba
    ssim_map = ssim_map_numba
else:
    sigmoid = sigmoid_numpy
    soft_threshold = soft_threshold_numpy
    render_ellipses = render_ellipses_numpy
    ssim_map = ssim_map_numpy
