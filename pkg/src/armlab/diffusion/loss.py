"""Training objectives for both policy heads."""

from __future__ import annotations

import numpy as np

from armlab.diffusion.sampler import q_sample
from armlab.errors import ConfigError
from armlab.nn import tensor as T


def epsilon_loss_batch(net, latents, x0: np.ndarray, t: np.ndarray,
                       eps: np.ndarray) -> T.Tensor:
    """MSE between predicted and true noise on the noised chunks.

    x0/eps: [B, H, A] normalized chunks and standard-normal noise; t: [B]
    with entries in {1..T} sampled uniformly by the caller.
    """
    if x0.shape != eps.shape:
        raise ConfigError(f"chunk/noise shape mismatch: {x0.shape} vs {eps.shape}")
    if x0.shape[1:] != net.chunk_shape:
        raise ConfigError(f"chunk shape {x0.shape[1:]} does not match net {net.chunk_shape}")
    x_t = q_sample(x0, t, eps, net.schedule)
    eps_hat = net.predict_noise_batch(latents, x_t, t, as_tensor=True)
    diff = eps_hat - T.Tensor(eps)
    return T.tmean(diff * diff)


def epsilon_loss(net, obs, x0: np.ndarray, t: int, eps: np.ndarray) -> T.Tensor:
    """Single-observation form of the diffusion objective."""
    latents = net.encode_observations([obs], as_tensor=True)
    return epsilon_loss_batch(net, latents, x0[None], np.array([t]), eps[None])


def l1_loss_batch(net, latents, x0: np.ndarray) -> T.Tensor:
    """Mean absolute error of the regression head against demonstration chunks."""
    if x0.shape[1:] != net.chunk_shape:
        raise ConfigError(f"chunk shape {x0.shape[1:]} does not match net {net.chunk_shape}")
    pred = net.predict_chunk_batch(latents, as_tensor=True)
    return T.tmean(T.absolute(pred - T.Tensor(x0)))
