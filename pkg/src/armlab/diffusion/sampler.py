"""Forward noising and the deterministic DDIM reverse sampler.

The sampler is written against a small duck-typed denoiser interface:
`net.schedule` (NoiseSchedule), `net.chunk_shape` (H, A),
`net.encode_observations(obs_batch)` and
`net.predict_noise_batch(latents, x_t, t)`. All array math here is plain
numpy; gradients never flow through sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from armlab.diffusion.schedule import NoiseSchedule
from armlab.errors import ConfigError, UsageError
from armlab.seeding import rng_for


@dataclass(frozen=True)
class DiffusionConfig:
    T_train: int = 50
    inference_steps: int = 50
    eta: float = 0.0
    clip_denoised: bool = True

    def __post_init__(self):
        if not (1 <= self.inference_steps <= self.T_train):
            raise ConfigError(
                f"inference_steps must lie in [1, {self.T_train}], got {self.inference_steps}")
        if self.eta < 0:
            raise ConfigError("eta must be non-negative")


def _ab(sched: NoiseSchedule, t):
    return sched.alpha_bar[np.asarray(t)]


def q_sample(x0: np.ndarray, t, eps: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Forward process: x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps.

    `t` is a single timestep or an array of per-sample timesteps matching the
    leading axis of x0.
    """
    if np.asarray(eps).shape != np.asarray(x0).shape:
        raise UsageError("eps must match x0 in shape")
    t_arr = np.asarray(t)
    if np.any(t_arr < 1) or np.any(t_arr > sched.T):
        raise UsageError(f"t must lie in [1, {sched.T}]")
    ab = _ab(sched, t_arr)
    if t_arr.ndim:  # per-sample: broadcast over trailing axes
        ab = ab.reshape(ab.shape + (1,) * (x0.ndim - ab.ndim))
    return (np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps).astype(x0.dtype)


def ddim_step(x_t: np.ndarray, eps_pred: np.ndarray, t: int, t_prev: int,
              sched: NoiseSchedule, clip_denoised: bool = False) -> np.ndarray:
    """One deterministic (eta=0) reverse step from t to t_prev.

    The update runs in float64: near t=T the 1/sqrt(alpha_bar) factor is
    large enough to amplify float32 rounding beyond the 1e-4 round-trip
    contract.
    """
    if not (0 <= t_prev < t <= sched.T):
        raise UsageError(f"need 0 <= t_prev < t <= T, got t={t}, t_prev={t_prev}")
    ab_t = sched.alpha_bar[t]
    ab_p = sched.alpha_bar[t_prev]
    x = x_t.astype(np.float64, copy=False)
    e = eps_pred.astype(np.float64, copy=False)
    x0_hat = (x - np.sqrt(1.0 - ab_t) * e) / np.sqrt(ab_t)
    if clip_denoised:
        x0_hat = np.clip(x0_hat, -1.0, 1.0)
    return (np.sqrt(ab_p) * x0_hat + np.sqrt(1.0 - ab_p) * e).astype(x_t.dtype)


def inference_timesteps(T: int, steps: int) -> list[tuple[int, int]]:
    """Evenly spaced (t, t_prev) pairs covering T down to 0.

    steps=2, T=50 gives [(50, 25), (25, 0)]; steps=T walks every timestep.
    """
    taus = [round(T * i / steps) for i in range(steps, 0, -1)]
    if len(set(taus)) != steps or taus[0] != T or taus[-1] < 1:
        raise ConfigError(f"cannot space {steps} steps over T={T}")
    return [(t, taus[i + 1] if i + 1 < steps else 0) for i, t in enumerate(taus)]


def ddim_sample_batch(net, obs_batch, cfg: DiffusionConfig, seeds: list[int],
                      trace: list | None = None) -> np.ndarray:
    """Denoise one action chunk per observation; each rollout owns a seed.

    Returns chunks in normalized action space, shape [B, H, A]. The decoder
    is evaluated exactly cfg.inference_steps times (one batched call per
    timestep pair).
    """
    if cfg.T_train != net.schedule.T:
        raise ConfigError(f"config T_train={cfg.T_train} but net was built with T={net.schedule.T}")
    h, a = net.chunk_shape
    x = np.stack([rng_for(s, "ddim-init").standard_normal((h, a)).astype(np.float32)
                  for s in seeds])
    latents = net.encode_observations(obs_batch)
    pairs = inference_timesteps(net.schedule.T, cfg.inference_steps)
    for i, (t, t_prev) in enumerate(pairs):
        if trace is not None:
            trace.append((t, t_prev))
        t_vec = np.full(len(seeds), t, dtype=np.int64)
        eps = net.predict_noise_batch(latents, x, t_vec)
        if cfg.eta > 0 and t_prev > 0:
            ab_t, ab_p = net.schedule.alpha_bar[t], net.schedule.alpha_bar[t_prev]
            sigma = cfg.eta * np.sqrt((1 - ab_p) / (1 - ab_t)) * np.sqrt(1 - ab_t / ab_p)
            coeff = np.sqrt(max(1 - ab_p - sigma**2, 0.0))
            x0_hat = (x - np.sqrt(1 - ab_t) * eps) / np.sqrt(ab_t)
            if cfg.clip_denoised:
                x0_hat = np.clip(x0_hat, -1.0, 1.0)
            z = np.stack([rng_for(s, "ddim-noise", i).standard_normal((h, a)).astype(np.float32)
                          for s in seeds])
            x = (np.sqrt(ab_p) * x0_hat + coeff * eps + sigma * z).astype(np.float32)
        else:
            x = ddim_step(x, eps, t, t_prev, net.schedule, clip_denoised=cfg.clip_denoised)
    return x


def ddim_sample(net, obs, cfg: DiffusionConfig, seed: int,
                trace: list | None = None) -> np.ndarray:
    """Single-observation convenience wrapper; returns a normalized [H, A] chunk."""
    return ddim_sample_batch(net, [obs], cfg, [seed], trace=trace)[0]
