"""Reverse-mode autodiff over numpy arrays.

A Tensor wraps one ndarray and remembers how it was produced; backward()
walks the graph in reverse topological order and accumulates gradients into
leaf tensors. Training runs in float32; building a graph from float64 inputs
is supported for finite-difference gradient checking.

Gradient accumulation is plain `+=` over a deterministic traversal order, so
repeated runs produce bit-identical gradients.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from armlab.errors import ConfigError, UsageError
from armlab.nn import _kernels as _k

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph construction (inference / sampling paths)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_bw")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._bw: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise UsageError("tensor/tensor division is not supported; multiply by a reciprocal")
        return mul(self, 1.0 / other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return power(self, p)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _const(x, like: np.ndarray) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype != like.dtype:
        arr = arr.astype(like.dtype)
    return arr


def _wants(t: Tensor) -> bool:
    """Whether a gradient flowing into `t` is ever used."""
    return t.requires_grad or t._bw is not None


def _make(data: np.ndarray, parents: tuple[Tensor, ...], bw: Callable) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad or p._parents for p in parents):
        out._parents = parents
        out._bw = bw
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to `shape` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _accum(t: Tensor, g: np.ndarray) -> None:
    # First write copies: the same buffer may be routed to several parents,
    # and later in-place += must not alias another tensor's gradient.
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad += g


def _accum_owned(t: Tensor, g: np.ndarray) -> None:
    # Variant for freshly allocated buffers that no one else references.
    if t.grad is None and g.dtype == t.data.dtype:
        t.grad = g
    else:
        _accum(t, g)

def _accum_ub(t: Tensor, g: np.ndarray, shape) -> None:
    red = _unbroadcast(g, shape)
    if red is g:
        _accum(t, red)
    else:
        _accum_owned(t, red)



# -- elementwise ---------------------------------------------------------

def add(a: Tensor, b) -> Tensor:
    if isinstance(b, Tensor):
        out_data = a.data + b.data

        def bw(g):
            if _wants(a):
                _accum_ub(a, g, a.data.shape)
            if _wants(b):
                _accum_ub(b, g, b.data.shape)

        return _make(out_data, (a, b), bw)
    c = _const(b, a.data)
    return _make(a.data + c, (a,), lambda g: _accum_ub(a, g, a.data.shape))


def sub(a: Tensor, b) -> Tensor:
    if isinstance(b, Tensor):
        out_data = a.data - b.data

        def bw(g):
            if _wants(a):
                _accum_ub(a, g, a.data.shape)
            if _wants(b):
                _accum_owned(b, _unbroadcast(-g, b.data.shape))

        return _make(out_data, (a, b), bw)
    c = _const(b, a.data)
    return _make(a.data - c, (a,), lambda g: _accum_ub(a, g, a.data.shape))


def mul(a: Tensor, b) -> Tensor:
    if isinstance(b, Tensor):
        out_data = a.data * b.data

        def bw(g):
            if _wants(a):
                _accum_owned(a, _unbroadcast(g * b.data, a.data.shape))
            if _wants(b):
                _accum_owned(b, _unbroadcast(g * a.data, b.data.shape))

        return _make(out_data, (a, b), bw)
    c = _const(b, a.data)
    return _make(a.data * c, (a,), lambda g: _accum_owned(a, _unbroadcast(g * c, a.data.shape)))


def power(a: Tensor, p: float) -> Tensor:
    out_data = a.data ** p
    return _make(out_data, (a,), lambda g: _accum_owned(a, g * (p * a.data ** (p - 1))))


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)
    return _make(out_data, (a,), lambda g: _accum_owned(a, g * out_data))


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)
    return _make(out_data, (a,), lambda g: _accum_owned(a, g * (1.0 - out_data * out_data)))


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)
    return _make(out_data, (a,), lambda g: _accum_owned(a, g * (a.data > 0)))


_GELU_C = 0.7978845608028654  # sqrt(2/pi)


def gelu(a: Tensor) -> Tensor:
    """tanh-approximate GELU; the backward differentiates the approximation."""
    x = a.data
    x2 = x * x
    t = np.tanh(_GELU_C * (x + 0.044715 * (x2 * x)))
    out_data = 0.5 * x * (1.0 + t)

    def bw(g):
        d_inner = _GELU_C * (1.0 + 0.134145 * x2)
        da = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner
        _accum_owned(a, g * da)

    return _make(out_data, (a,), bw)


def absolute(a: Tensor) -> Tensor:
    out_data = np.abs(a.data)
    return _make(out_data, (a,), lambda g: _accum_owned(a, g * np.sign(a.data)))


# -- reductions ----------------------------------------------------------

def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape))
            return
        gg = g if keepdims else np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(gg, a.data.shape))

    return _make(out_data, (a,), bw)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


# -- shape ops -----------------------------------------------------------

def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape
    return _make(a.data.reshape(shape), (a,), lambda g: _accum(a, g.reshape(old)))


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _make(a.data.transpose(axes), (a,),
                 lambda g: _accum(a, g.transpose(inv)))


def concat(parts: Iterable[Tensor], axis: int) -> Tensor:
    parts = tuple(parts)
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        for p, piece in zip(parts, np.split(g, splits, axis=axis)):
            if _wants(p):
                _accum(p, piece)

    return _make(out_data, parts, bw)


# -- matmul --------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise UsageError("matmul operands must have rank >= 2")
    out_data = a.data @ b.data

    def bw(g):
        if _wants(a):
            _accum_owned(a, _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape))
        if _wants(b):
            if b.data.ndim == 2 and a.data.ndim > 2:
                # shared weight: flatten the batch dims into one GEMM
                k = a.data.shape[-1]
                cols = g.shape[-1]
                db = a.data.reshape(-1, k).T @ g.reshape(-1, cols)
                _accum_owned(b, db)
            else:
                _accum_owned(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape))

    return _make(out_data, (a, b), bw)


# -- fused normalization / softmax ---------------------------------------

def softmax(a: Tensor) -> Tensor:
    """Numerically stable softmax over the last axis."""
    out_data = _k.softmax_forward(a.data)

    def bw(g):
        _accum_owned(a, _k.softmax_backward(out_data, g))

    return _make(out_data, (a,), bw)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale+shift."""
    d = x.data.shape[-1]
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise ConfigError(f"layer_norm gain/bias must have shape ({d},)")
    out_data, xhat, inv = _k.ln_forward(x.data, gain.data, bias.data, eps)

    def bw(g):
        lead = tuple(range(g.ndim - 1))
        _accum_owned(gain, (g * xhat).sum(axis=lead))
        _accum_owned(bias, g.sum(axis=lead))
        if _wants(x):
            _accum_owned(x, _k.ln_backward_dx(xhat, inv, gain.data, g))

    return _make(out_data, (x, gain, bias), bw)


# -- convolution (NHWC) --------------------------------------------------

def _im2col(x: np.ndarray, kh: int, kw: int, sh: int, sw: int, ph: int, pw: int):
    if ph or pw:
        x = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::sh, ::sw]
    n, oh, ow = win.shape[:3]
    cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))
    return cols.reshape(n * oh * ow, kh * kw * x.shape[3]), oh, ow


def conv2d(x: Tensor, w: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2D convolution, x: [N,H,W,Cin], w: [kh,kw,Cin,Cout]."""
    n, h, wd, cin = x.data.shape
    kh, kw, wcin, cout = w.data.shape
    if wcin != cin:
        raise ConfigError(f"conv2d channel mismatch: input {cin}, kernel {wcin}")
    sh = sw = stride
    ph = pw = padding
    cols, oh, ow = _im2col(x.data, kh, kw, sh, sw, ph, pw)
    wmat = w.data.reshape(kh * kw * cin, cout)
    out_data = (cols @ wmat).reshape(n, oh, ow, cout)

    def bw(g):
        g2 = g.reshape(n * oh * ow, cout)
        _accum_owned(w, (cols.T @ g2).reshape(kh, kw, cin, cout))
        if not _wants(x):
            return
        # dx by scattering each kernel tap's contribution back onto the
        # padded input grid; avoids materializing a dilated gradient.
        dxp = np.zeros((n, h + 2 * ph, wd + 2 * pw, cin), dtype=g.dtype)
        wmat_t = w.data.reshape(kh, kw, cin, cout)
        eh = (oh - 1) * sh + 1
        ew = (ow - 1) * sw + 1
        for i in range(kh):
            for j in range(kw):
                contrib = (g2 @ wmat_t[i, j].T).reshape(n, oh, ow, cin)
                dxp[:, i:i + eh:sh, j:j + ew:sw] += contrib
        dx = np.ascontiguousarray(dxp[:, ph:ph + h, pw:pw + wd]) if (ph or pw) else dxp
        _accum_owned(x, dx)

    return _make(out_data, (x, w), bw)


# -- backward driver ------------------------------------------------------

def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar loss into every reachable leaf."""
    if loss.data.size != 1:
        raise UsageError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._bw is not None and node.grad is not None:
            node._bw(node.grad)
            if not node.requires_grad:
                node.grad = None  # free intermediate grads eagerly
    # drop graph references so intermediate buffers are collectable
    for node in topo:
        if not node.requires_grad:
            node._parents = ()
            node._bw = None
