"""The policy network: per-camera conv backbones, a transformer encoder over
observation tokens, and a transformer decoder that cross-attends the latents.

Two interchangeable heads share the trunk. The diffusion head consumes a
noised action chunk plus a one-hot diffusion timestep (projected and appended
as an extra cross-attention token) and predicts the noise. The regression
head feeds learned queries through the same decoder stack and outputs the
chunk directly for an L1 objective.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

import armlab.nn as nn
from armlab.diffusion.schedule import NoiseSchedule, make_schedule
from armlab.errors import ConfigError, UsageError
from armlab.nn import tensor as T
from armlab.nn.tensor import Tensor
from armlab.policy.config import PolicyConfig
from armlab.policy.types import ObsBatch, Observation


class _EncoderLayer:
    def __init__(self, store, name, dim, heads, mlp_ratio):
        self.ln1 = nn.LayerNorm(store, f"{name}.ln1", dim)
        self.attn = nn.MultiHeadAttention(store, f"{name}.attn", dim, heads)
        self.ln2 = nn.LayerNorm(store, f"{name}.ln2", dim)
        self.mlp = nn.MLP(store, f"{name}.mlp", dim, mlp_ratio * dim)

    def __call__(self, x):
        h = self.ln1(x)
        x = x + self.attn(h, h, h)
        return x + self.mlp(self.ln2(x))


class _DecoderLayer:
    def __init__(self, store, name, dim, heads, mlp_ratio):
        self.ln1 = nn.LayerNorm(store, f"{name}.ln1", dim)
        self.self_attn = nn.MultiHeadAttention(store, f"{name}.self", dim, heads)
        self.ln2 = nn.LayerNorm(store, f"{name}.ln2", dim)
        self.cross_attn = nn.MultiHeadAttention(store, f"{name}.cross", dim, heads)
        self.ln3 = nn.LayerNorm(store, f"{name}.ln3", dim)
        self.mlp = nn.MLP(store, f"{name}.mlp", dim, mlp_ratio * dim)

    def __call__(self, x, kv):
        h = self.ln1(x)
        x = x + self.self_attn(h, h, h)
        x = x + self.cross_attn(self.ln2(x), kv, kv)
        return x + self.mlp(self.ln3(x))


class PolicyNet:
    def __init__(self, cfg: PolicyConfig, seed: int = 0, dtype=np.float32):
        self.cfg = cfg
        self.schedule: NoiseSchedule = make_schedule(cfg.T_train)
        self.store = nn.ParamStore(seed=seed, dtype=dtype)
        self.denoise_calls = 0
        self.last_decoder_hidden_shape: tuple[int, ...] | None = None
        self.action_low: np.ndarray | None = None
        self.action_high: np.ndarray | None = None
        d = cfg.model_dim
        store = self.store

        # trunk: vision backbones + observation encoder
        if cfg.num_cameras == 0:
            self.backbones = []
            self.token_proj = None
        elif cfg.share_backbones:
            shared = nn.ConvBackbone(store, "trunk.backbone", cfg.backbone)
            self.backbones = [shared] * cfg.num_cameras
            self.token_proj = nn.Linear(store, "trunk.token_proj", cfg.backbone.out_channels, d)
        else:
            self.backbones = [nn.ConvBackbone(store, f"trunk.backbone{i}", cfg.backbone)
                              for i in range(cfg.num_cameras)]
            self.token_proj = nn.Linear(store, "trunk.token_proj", cfg.backbone.out_channels, d)
        self.proprio_proj = nn.Linear(store, "trunk.proprio_proj", cfg.action_dim, d)
        self.enc_pos = store.param("trunk.enc_pos", (cfg.token_count, d), ("normal", 0.02))
        self.enc_layers = [_EncoderLayer(store, f"trunk.enc{i}", d, cfg.encoder_heads, cfg.mlp_ratio)
                           for i in range(cfg.encoder_layers)]
        self.enc_ln = nn.LayerNorm(store, "trunk.enc_ln", d)

        # decoder-side parameters differ between heads
        if cfg.head_kind == "diffusion":
            self.x_proj = nn.Linear(store, "dec.in_x", cfg.action_dim, d)
            self.dec_pos = store.param("dec.pos", (cfg.chunk_len, d), ("normal", 0.02))
            self.t_proj = nn.Linear(store, "dec.t_proj", cfg.T_train, d)
        else:
            self.queries = store.param("dec.queries", (cfg.chunk_len, d), ("normal", 0.02))
        self.dec_layers = [_DecoderLayer(store, f"dec.l{i}", d, cfg.decoder_heads, cfg.mlp_ratio)
                           for i in range(cfg.decoder_layers)]
        self.dec_ln = nn.LayerNorm(store, "dec.ln", d)
        # near-zero init keeps the initial prediction small without blocking
        # gradient flow on the first batch
        self.out_proj = nn.Linear(store, "dec.out", d, cfg.action_dim, init=("normal", 1e-3))

    # -- normalization ----------------------------------------------------

    @property
    def chunk_shape(self) -> tuple[int, int]:
        return (self.cfg.chunk_len, self.cfg.action_dim)

    def set_normalization(self, low: np.ndarray, high: np.ndarray) -> None:
        low = np.asarray(low, dtype=np.float32)
        high = np.asarray(high, dtype=np.float32)
        if low.shape != (self.cfg.action_dim,) or high.shape != (self.cfg.action_dim,):
            raise ConfigError("normalization bounds must have action_dim entries")
        self.action_low, self.action_high = low, high

    def _require_norm(self):
        if self.action_low is None:
            raise UsageError("normalization bounds not set (train first or load a checkpoint)")

    def normalize_actions(self, a: np.ndarray) -> np.ndarray:
        self._require_norm()
        span = self.action_high - self.action_low
        safe = np.where(span > 0, span, 1.0)
        out = 2.0 * (a - self.action_low) / safe - 1.0
        return np.where(span > 0, out, 0.0).astype(np.float32)

    def denormalize_actions(self, a: np.ndarray) -> np.ndarray:
        self._require_norm()
        span = self.action_high - self.action_low
        mid = (self.action_low + self.action_high) * 0.5
        return np.where(span > 0, (a + 1.0) * 0.5 * span + self.action_low, mid).astype(np.float32)

    # -- forward ----------------------------------------------------------

    def _stack_observations(self, obs_list: list[Observation]) -> ObsBatch:
        h, w = self.cfg.image_hw
        imgs = np.zeros((len(obs_list), self.cfg.num_cameras, h, w, 3), dtype=np.uint8)
        prop = np.empty((len(obs_list), self.cfg.action_dim), dtype=np.float32)
        for i, obs in enumerate(obs_list):
            for ci, cam in enumerate(self.cfg.cameras):
                if cam not in obs.images:
                    raise ConfigError(f"observation is missing camera '{cam}'")
                img = obs.images[cam]
                if img.shape != (h, w, 3):
                    raise ConfigError(f"camera '{cam}' has shape {img.shape}, expected {(h, w, 3)}")
                imgs[i, ci] = img
            prop[i] = self.normalize_actions(obs.proprio)
        return ObsBatch(images=imgs, proprio=prop)

    def encode_observations(self, obs, as_tensor: bool = False):
        """Latents [B, token_count, d] for a list[Observation] or an ObsBatch."""
        if not isinstance(obs, ObsBatch):
            obs = self._stack_observations(list(obs))
        b, ncam = obs.images.shape[:2]
        if ncam != self.cfg.num_cameras:
            raise ConfigError(f"got {ncam} cameras, config has {self.cfg.num_cameras}")

        def run():
            tokens = []
            for ci in range(ncam):
                x = obs.images[:, ci].astype(self.store.dtype)
                x *= 1.0 / 127.5
                x -= 1.0
                feats = self.backbones[ci](Tensor(x))          # [B, fh, fw, C]
                _, fh, fw, c = feats.shape
                tokens.append(T.reshape(feats, (b, fh * fw, c)))
            cam_tokens = [self.token_proj(tk) for tk in tokens]
            prop = T.reshape(self.proprio_proj(Tensor(obs.proprio)), (b, 1, self.cfg.model_dim))
            toks = T.concat(cam_tokens + [prop], axis=1)
            toks = toks + T.reshape(self.enc_pos, (1, *self.enc_pos.shape))
            for layer in self.enc_layers:
                toks = layer(toks)
            return self.enc_ln(toks)

        if as_tensor:
            return run()
        with T.no_grad():
            return run().data

    def encode_observation(self, obs: Observation) -> np.ndarray:
        """Single-observation latents [token_count, d]."""
        return self.encode_observations([obs])[0]

    def _timestep_tokens(self, t: np.ndarray) -> Tensor:
        t = np.asarray(t)
        if np.any(t < 1) or np.any(t > self.cfg.T_train):
            raise UsageError(f"diffusion timestep out of [1, {self.cfg.T_train}]")
        onehot = np.zeros((t.shape[0], self.cfg.T_train), dtype=self.store.dtype)
        onehot[np.arange(t.shape[0]), t - 1] = 1.0
        return T.reshape(self.t_proj(Tensor(onehot)), (t.shape[0], 1, self.cfg.model_dim))

    def predict_noise_batch(self, latents, x_t: np.ndarray, t: np.ndarray,
                            as_tensor: bool = False):
        """Noise prediction [B, H, A] given latents and noised chunks."""
        if self.cfg.head_kind != "diffusion":
            raise UsageError("predict_noise requires a diffusion-head net")
        if x_t.shape[1:] != self.chunk_shape:
            raise ConfigError(f"x_t shape {x_t.shape[1:]} does not match net {self.chunk_shape}")
        self.denoise_calls += 1

        def run(lat):
            h = self.x_proj(Tensor(np.asarray(x_t, dtype=self.store.dtype)))
            h = h + T.reshape(self.dec_pos, (1, *self.dec_pos.shape))
            kv = T.concat([lat, self._timestep_tokens(t)], axis=1)
            for layer in self.dec_layers:
                h = layer(h, kv)
            hidden = self.dec_ln(h)
            self.last_decoder_hidden_shape = hidden.shape
            return self.out_proj(hidden)

        if as_tensor:
            return run(latents)
        with T.no_grad():
            lat = latents if isinstance(latents, Tensor) else Tensor(latents)
            return run(lat).data

    def predict_noise(self, latents: np.ndarray, x_t: np.ndarray, t: int) -> np.ndarray:
        """Single-sample noise prediction [H, A]."""
        lat = latents[None] if latents.ndim == 2 else latents
        return self.predict_noise_batch(lat, x_t[None], np.array([t]))[0]

    def predict_chunk_batch(self, latents, as_tensor: bool = False):
        """Regression-head chunk prediction [B, H, A]."""
        if self.cfg.head_kind != "l1":
            raise UsageError("predict_chunk requires an l1-head net")

        def run(lat):
            h = T.reshape(self.queries, (1, *self.queries.shape))
            for layer in self.dec_layers:
                h = layer(h, lat)
            hidden = self.dec_ln(h)
            self.last_decoder_hidden_shape = hidden.shape
            return self.out_proj(hidden)

        if as_tensor:
            return run(latents)
        with T.no_grad():
            lat = latents if isinstance(latents, Tensor) else Tensor(latents)
            return run(lat).data

    def predict_chunk_l1(self, obs: Observation) -> np.ndarray:
        """Single-observation regression chunk [H, A], normalized space."""
        latents = self.encode_observations([obs])
        return self.predict_chunk_batch(Tensor(latents))[0]

    # -- bookkeeping --------------------------------------------------------

    def param_count(self) -> int:
        return self.store.total_size()

    def config_payload(self) -> dict:
        payload = {"policy": self.cfg.to_dict()}
        if self.action_low is not None:
            payload["normalization"] = {
                "low": [float(v) for v in self.action_low],
                "high": [float(v) for v in self.action_high],
            }
        return payload


def save_policy(path: str | Path, net: PolicyNet, step: int, extra: dict | None = None) -> None:
    config = net.config_payload()
    if extra:
        config.update(extra)
    nn.save_checkpoint(path, net.store, config=config, step=step)


def load_policy(path: str | Path, seed: int = 0) -> tuple[PolicyNet, dict]:
    params, manifest = nn.load_checkpoint(path)
    cfg = PolicyConfig.from_dict(manifest["config"]["policy"])
    net = PolicyNet(cfg, seed=seed)
    nn.restore_into(net.store, params)
    norm = manifest["config"].get("normalization")
    if norm:
        net.set_normalization(np.array(norm["low"]), np.array(norm["high"]))
    return net, manifest
