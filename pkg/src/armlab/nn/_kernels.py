"""Fused row-wise kernels for the hottest elementwise paths.

numba parallelizes over rows; every row is reduced sequentially, so results
are bit-stable across runs and thread counts. Falls back to plain numpy when
numba is unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f
        return deco

    prange = range


@njit(cache=True)
def _softmax_fwd(x, out):
    r, c = x.shape
    for i in range(r):
        m = x[i, 0]
        for j in range(1, c):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(c):
            e = np.exp(x[i, j] - m)
            out[i, j] = e
            s += e
        inv = 1.0 / s
        for j in range(c):
            out[i, j] *= inv


@njit(cache=True)
def _softmax_bwd(y, g, dx):
    r, c = y.shape
    for i in range(r):
        dot = 0.0
        for j in range(c):
            dot += g[i, j] * y[i, j]
        for j in range(c):
            dx[i, j] = y[i, j] * (g[i, j] - dot)


@njit(cache=True)
def _ln_fwd(x, gain, bias, eps, out, xhat, inv):
    r, c = x.shape
    for i in range(r):
        mu = 0.0
        for j in range(c):
            mu += x[i, j]
        mu /= c
        var = 0.0
        for j in range(c):
            d = x[i, j] - mu
            var += d * d
        var /= c
        s = 1.0 / np.sqrt(var + eps)
        inv[i] = s
        for j in range(c):
            h = (x[i, j] - mu) * s
            xhat[i, j] = h
            out[i, j] = gain[j] * h + bias[j]


@njit(cache=True)
def _ln_bwd_dx(xhat, inv, gain, g, dx):
    r, c = xhat.shape
    for i in range(r):
        m1 = 0.0
        m2 = 0.0
        for j in range(c):
            dh = g[i, j] * gain[j]
            m1 += dh
            m2 += dh * xhat[i, j]
        m1 /= c
        m2 /= c
        for j in range(c):
            dx[i, j] = inv[i] * (g[i, j] * gain[j] - m1 - xhat[i, j] * m2)


@njit(cache=True)
def _adam_update(p, g, m, v, b1, b2, c1, c2, eps, lr, wd):
    n = p.size
    bad = 0
    for i in range(n):
        gi = g[i]
        if not np.isfinite(gi):
            bad = 1
        mi = b1 * m[i] + (1.0 - b1) * gi
        vi = b2 * v[i] + (1.0 - b2) * gi * gi
        m[i] = mi
        v[i] = vi
        upd = (mi / c1) / (np.sqrt(vi / c2) + eps) + wd * p[i]
        p[i] = p[i] - lr * upd
    return bad


def softmax_forward(x: np.ndarray) -> np.ndarray:
    if HAVE_NUMBA and x.dtype == np.float32:
        x2 = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
        out = np.empty_like(x2)
        _softmax_fwd(x2, out)
        return out.reshape(x.shape)
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(y: np.ndarray, g: np.ndarray) -> np.ndarray:
    if HAVE_NUMBA and y.dtype == np.float32 and g.dtype == np.float32:
        y2 = y.reshape(-1, y.shape[-1])
        g2 = np.ascontiguousarray(g.reshape(-1, g.shape[-1]))
        dx = np.empty_like(y2)
        _softmax_bwd(y2, g2, dx)
        return dx.reshape(y.shape)
    dot = (g * y).sum(axis=-1, keepdims=True)
    return y * (g - dot)


def ln_forward(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float):
    """Returns (out, xhat, inv_std[...,]) with xhat/inv saved for backward."""
    if HAVE_NUMBA and x.dtype == np.float32:
        c = x.shape[-1]
        x2 = np.ascontiguousarray(x.reshape(-1, c))
        out = np.empty_like(x2)
        xhat = np.empty_like(x2)
        inv = np.empty(x2.shape[0], dtype=np.float32)
        _ln_fwd(x2, gain, bias, np.float32(eps), out, xhat, inv)
        return (out.reshape(x.shape), xhat.reshape(x.shape),
                inv.reshape(x.shape[:-1] + (1,)))
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    return gain * xhat + bias, xhat, inv


def ln_backward_dx(xhat: np.ndarray, inv: np.ndarray, gain: np.ndarray,
                   g: np.ndarray) -> np.ndarray:
    if HAVE_NUMBA and xhat.dtype == np.float32 and g.dtype == np.float32:
        c = xhat.shape[-1]
        x2 = xhat.reshape(-1, c)
        g2 = np.ascontiguousarray(g.reshape(-1, c))
        dx = np.empty_like(x2)
        _ln_bwd_dx(x2, inv.reshape(-1), gain, g2, dx)
        return dx.reshape(xhat.shape)
    dxhat = g * gain
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    return inv * (dxhat - m1 - xhat * m2)


def adam_update(p: np.ndarray, g: np.ndarray, m: np.ndarray, v: np.ndarray,
                b1: float, b2: float, c1: float, c2: float, eps: float,
                lr: float, wd: float) -> bool:
    """In-place fused update; returns True when the gradient was non-finite."""
    if HAVE_NUMBA and p.dtype == np.float32:
        bad = _adam_update(p.reshape(-1), np.ascontiguousarray(g.reshape(-1)),
                           m.reshape(-1), v.reshape(-1),
                           np.float32(b1), np.float32(b2), np.float32(c1),
                           np.float32(c2), np.float32(eps), np.float32(lr),
                           np.float32(wd))
        return bool(bad)
    if not np.all(np.isfinite(g)):
        return True
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * np.square(g)
    update = (m / c1) / (np.sqrt(v / c2) + eps) + wd * p
    p -= (lr * update).astype(p.dtype, copy=False)
    return False
