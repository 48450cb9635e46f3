"""Squared-cosine noise schedule.

alpha_bar[t] is the cumulative signal fraction after t noising steps:
alpha_bar[t] = f(t)/f(0) with f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2).
Per-step retention factors are floored at 0.001 (beta capped at 0.999) so the
terminal alpha_bar stays strictly positive and the reverse update never
divides by zero.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from armlab.errors import ConfigError

BETA_MAX = 0.999


@dataclass(frozen=True)
class NoiseSchedule:
    T: int
    s: float
    alpha_bar: np.ndarray = field(repr=False)  # length T+1, alpha_bar[0] == 1

    def __post_init__(self):
        ab = self.alpha_bar
        if ab.shape != (self.T + 1,):
            raise ConfigError("alpha_bar must have T+1 entries")
        if ab[0] != 1.0:
            raise ConfigError("alpha_bar[0] must be exactly 1")
        if not np.all(np.diff(ab) < 0):
            raise ConfigError("alpha_bar must be strictly decreasing")
        if not (0.0 < ab[-1] < 0.05):
            raise ConfigError(f"terminal alpha_bar {ab[-1]} outside (0, 0.05)")
        if not np.all((ab > 0.0) & (ab <= 1.0)):
            raise ConfigError("alpha_bar values must lie in (0, 1]")


def make_schedule(T: int, s: float = 0.008) -> NoiseSchedule:
    if T < 1:
        raise ConfigError("schedule needs at least one timestep")
    if s <= 0:
        raise ConfigError("cosine offset s must be positive")
    t = np.arange(T + 1, dtype=np.float64)
    f = np.cos((t / T + s) / (1.0 + s) * np.pi / 2.0) ** 2
    raw = f / f[0]
    betas = np.minimum(1.0 - raw[1:] / raw[:-1], BETA_MAX)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    return NoiseSchedule(T=T, s=s, alpha_bar=alpha_bar)


def schedule_csv(sched: NoiseSchedule) -> str:
    """CSV dump (t, alpha_bar) for plot tooling."""
    buf = io.StringIO()
    buf.write("t,alpha_bar\n")
    for t in range(sched.T + 1):
        buf.write(f"{t},{sched.alpha_bar[t]:.17g}\n")
    return buf.getvalue()
