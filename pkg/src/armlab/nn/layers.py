"""Parameter store and the layer zoo used by the policy network.

All layers accept inputs with arbitrary leading batch dimensions. Data layout
for images is NHWC so that per-position channel normalization is a plain
last-axis layer norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from armlab.errors import ConfigError
from armlab.nn import tensor as T
from armlab.nn.tensor import Tensor
from armlab.seeding import rng_for


class ParamStore:
    """Named parameters plus their gradients and Adam state."""

    def __init__(self, seed: int = 0, dtype=np.float32):
        self.params: dict[str, Tensor] = {}
        self.moment1: dict[str, np.ndarray] = {}
        self.moment2: dict[str, np.ndarray] = {}
        self.step_count = 0
        self.dtype = np.dtype(dtype)
        self._rng = rng_for(seed, "param-init")

    def param(self, name: str, shape: tuple[int, ...], init) -> Tensor:
        """Allocate one named parameter.

        init is "zeros", "ones", ("normal", std), ("he", fan_in) or
        ("fanin", fan_in).
        """
        if name in self.params:
            raise ConfigError(f"duplicate parameter name '{name}'")
        if init == "zeros":
            data = np.zeros(shape, dtype=self.dtype)
        elif init == "ones":
            data = np.ones(shape, dtype=self.dtype)
        else:
            kind, arg = init
            if kind == "normal":
                std = arg
            elif kind == "he":
                std = float(np.sqrt(2.0 / arg))
            elif kind == "fanin":
                std = float(1.0 / np.sqrt(arg))
            else:
                raise ConfigError(f"unknown init '{kind}'")
            data = (self._rng.standard_normal(shape) * std).astype(self.dtype)
        t = Tensor(data, requires_grad=True)
        self.params[name] = t
        return t

    def names(self) -> list[str]:
        return list(self.params)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def grad_of(self, name: str) -> np.ndarray:
        """Gradient for one parameter; zeros when unreachable from the loss."""
        p = self.params[name]
        return p.grad if p.grad is not None else np.zeros_like(p.data)

    def total_size(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def set_data(self, name: str, value: np.ndarray) -> None:
        p = self.params[name]
        if p.data.shape != value.shape:
            raise ConfigError(f"shape mismatch for '{name}': {p.data.shape} vs {value.shape}")
        p.data = value.astype(self.dtype)


class Linear:
    def __init__(self, store: ParamStore, name: str, din: int, dout: int, init=None):
        init = init or ("fanin", din)
        self.w = store.param(f"{name}.w", (din, dout), init)
        self.b = store.param(f"{name}.b", (dout,), "zeros")

    def __call__(self, x: Tensor) -> Tensor:
        return T.matmul(x, self.w) + self.b


class LayerNorm:
    def __init__(self, store: ParamStore, name: str, dim: int):
        self.gain = store.param(f"{name}.gain", (dim,), "ones")
        self.bias = store.param(f"{name}.bias", (dim,), "zeros")

    def __call__(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.gain, self.bias)


class MultiHeadAttention:
    """softmax(Q Kᵀ / sqrt(d_head)) V per head, heads concatenated, projected."""

    def __init__(self, store: ParamStore, name: str, dim: int, heads: int):
        if dim % heads != 0:
            raise ConfigError(f"model dim {dim} not divisible by {heads} heads")
        self.dim = dim
        self.heads = heads
        self.wq = Linear(store, f"{name}.q", dim, dim)
        self.wk = Linear(store, f"{name}.k", dim, dim)
        self.wv = Linear(store, f"{name}.v", dim, dim)
        self.wo = Linear(store, f"{name}.out", dim, dim)

    def _split(self, x: Tensor) -> Tensor:
        *lead, n, _ = x.shape
        h, dh = self.heads, self.dim // self.heads
        x = T.reshape(x, (*lead, n, h, dh))
        r = len(x.shape)
        perm = tuple(range(r - 3)) + (r - 2, r - 3, r - 1)
        return T.transpose(x, perm)  # [..., h, n, dh]

    def _merge(self, x: Tensor) -> Tensor:
        r = len(x.shape)
        perm = tuple(range(r - 3)) + (r - 2, r - 3, r - 1)
        x = T.transpose(x, perm)  # [..., n, h, dh]
        *lead, n, h, dh = x.shape
        return T.reshape(x, (*lead, n, h * dh))

    def __call__(self, q: Tensor, k: Tensor, v: Tensor) -> Tensor:
        if q.shape[-1] != self.dim or k.shape[-1] != self.dim or v.shape[-1] != self.dim:
            raise ConfigError(f"attention expects feature dim {self.dim}")
        if k.shape[-2] != v.shape[-2]:
            raise ConfigError("keys and values must agree in token count")
        dh = self.dim // self.heads
        qh = self._split(self.wq(q))
        kh = self._split(self.wk(k))
        vh = self._split(self.wv(v))
        r = len(kh.shape)
        scores = T.matmul(qh, T.transpose(kh, tuple(range(r - 2)) + (r - 1, r - 2)))
        attn = T.softmax(scores * (1.0 / np.sqrt(dh)))
        ctx = T.matmul(attn, vh)
        return self.wo(self._merge(ctx))


class MLP:
    def __init__(self, store: ParamStore, name: str, dim: int, hidden: int):
        self.fc1 = Linear(store, f"{name}.fc1", dim, hidden, init=("he", dim))
        self.fc2 = Linear(store, f"{name}.fc2", hidden, dim)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(T.relu(self.fc1(x)))


class ResidualBlock:
    """Two 3x3 convs with per-position channel norm; strided entry downsampling."""

    def __init__(self, store: ParamStore, name: str, cin: int, cout: int, stride: int):
        self.stride = stride
        self.conv1 = store.param(f"{name}.conv1.w", (3, 3, cin, cout), ("he", 9 * cin))
        self.b1 = store.param(f"{name}.conv1.b", (cout,), "zeros")
        self.ln1 = LayerNorm(store, f"{name}.ln1", cout)
        self.conv2 = store.param(f"{name}.conv2.w", (3, 3, cout, cout), ("he", 9 * cout))
        self.b2 = store.param(f"{name}.conv2.b", (cout,), "zeros")
        self.ln2 = LayerNorm(store, f"{name}.ln2", cout)
        self.proj = None
        if stride != 1 or cin != cout:
            self.proj = store.param(f"{name}.proj.w", (1, 1, cin, cout), ("he", cin))
            self.pb = store.param(f"{name}.proj.b", (cout,), "zeros")

    def __call__(self, x: Tensor) -> Tensor:
        y = T.relu(self.ln1(T.conv2d(x, self.conv1, stride=self.stride, padding=1) + self.b1))
        y = self.ln2(T.conv2d(y, self.conv2, stride=1, padding=1) + self.b2)
        if self.proj is not None:
            x = T.conv2d(x, self.proj, stride=self.stride, padding=0) + self.pb
        return T.relu(y + x)


@dataclass(frozen=True)
class StageConfig:
    channels: int
    blocks: int = 2
    stride: int = 2


@dataclass(frozen=True)
class BackboneConfig:
    stem_channels: int = 16
    stem_stride: int = 1
    stages: tuple[StageConfig, ...] = (
        StageConfig(16), StageConfig(32), StageConfig(64), StageConfig(64),
    )

    @property
    def total_stride(self) -> int:
        s = self.stem_stride
        for st in self.stages:
            s *= st.stride
        return s

    @property
    def out_channels(self) -> int:
        return self.stages[-1].channels

    def to_dict(self) -> dict:
        return {
            "stem_channels": self.stem_channels,
            "stem_stride": self.stem_stride,
            "stages": [[s.channels, s.blocks, s.stride] for s in self.stages],
        }

    @staticmethod
    def from_dict(d: dict) -> "BackboneConfig":
        return BackboneConfig(
            stem_channels=d["stem_channels"],
            stem_stride=d["stem_stride"],
            stages=tuple(StageConfig(*s) for s in d["stages"]),
        )


class ConvBackbone:
    """Reduced residual feature extractor; maps [N,H,W,3] to [N,H/s,W/s,C]."""

    def __init__(self, store: ParamStore, name: str, cfg: BackboneConfig, in_channels: int = 3):
        self.cfg = cfg
        self.stem = store.param(f"{name}.stem.w", (3, 3, in_channels, cfg.stem_channels),
                                ("he", 9 * in_channels))
        self.stem_b = store.param(f"{name}.stem.b", (cfg.stem_channels,), "zeros")
        self.stem_ln = LayerNorm(store, f"{name}.stem.ln", cfg.stem_channels)
        self.blocks: list[ResidualBlock] = []
        cin = cfg.stem_channels
        for si, stage in enumerate(cfg.stages):
            for bi in range(stage.blocks):
                stride = stage.stride if bi == 0 else 1
                self.blocks.append(ResidualBlock(
                    store, f"{name}.s{si}.b{bi}", cin, stage.channels, stride))
                cin = stage.channels

    def __call__(self, x: Tensor) -> Tensor:
        n, h, w, _ = x.shape
        s = self.cfg.total_stride
        if h % s or w % s:
            raise ConfigError(f"image extents {h}x{w} not divisible by total stride {s}")
        y = T.relu(self.stem_ln(
            T.conv2d(x, self.stem, stride=self.cfg.stem_stride, padding=1) + self.stem_b))
        for blk in self.blocks:
            y = blk(y)
        return y
