"""Adam with decoupled weight decay and linear warmup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from armlab.errors import NonFiniteGradientError, UsageError
from armlab.nn import _kernels as kernels
from armlab.nn.layers import ParamStore


@dataclass(frozen=True)
class OptimizerConfig:
    base_rate: float = 1e-4
    warmup_steps: int = 5000
    weight_decay: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.base_rate <= 0 or self.warmup_steps < 0 or self.weight_decay < 0:
            raise UsageError("base_rate must be positive; warmup and decay non-negative")

    def to_dict(self) -> dict:
        return {
            "base_rate": self.base_rate, "warmup_steps": self.warmup_steps,
            "weight_decay": self.weight_decay, "beta1": self.beta1,
            "beta2": self.beta2, "epsilon": self.epsilon,
        }

    @staticmethod
    def from_dict(d: dict) -> "OptimizerConfig":
        return OptimizerConfig(**d)


def learning_rate(step: int, cfg: OptimizerConfig) -> float:
    """Linear ramp from 0 to base_rate over warmup_steps, then constant."""
    if step < 0:
        raise UsageError("step must be non-negative")
    if cfg.warmup_steps > 0 and step < cfg.warmup_steps:
        return cfg.base_rate * step / cfg.warmup_steps
    return cfg.base_rate


def adam_step(store: ParamStore, cfg: OptimizerConfig, step: int) -> None:
    """One bias-corrected Adam update at `step`, decay applied directly to weights.

    Raises NonFiniteGradientError (naming the parameter) before touching any
    state if a gradient is NaN/Inf, so an aborted step leaves the store intact.
    """
    if step < 1:
        raise UsageError("optimizer steps are counted from 1")
    if step <= store.step_count:
        raise UsageError(f"step counter must be monotone (got {step} after {store.step_count})")
    for name, p in store.params.items():
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            raise NonFiniteGradientError(name)
    lr = learning_rate(step, cfg)
    b1, b2, eps = cfg.beta1, cfg.beta2, cfg.epsilon
    c1 = 1.0 - b1 ** step
    c2 = 1.0 - b2 ** step
    for name, p in store.params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = store.moment1.get(name)
        if m is None:
            m = store.moment1[name] = np.zeros_like(p.data)
        v = store.moment2.get(name)
        if v is None:
            v = store.moment2[name] = np.zeros_like(p.data)
        kernels.adam_update(p.data, g, m, v, b1, b2, c1, c2, eps, lr, cfg.weight_decay)
    store.step_count = step
