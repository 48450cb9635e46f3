"""The training loop: batches in, checkpoints and a loss log out."""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

import armlab.nn as nn
from armlab.data.batch import make_batch
from armlab.data.index import DatasetIndex
from armlab.diffusion.loss import epsilon_loss_batch, l1_loss_batch
from armlab.errors import TrainDivergence, UsageError
from armlab.nn import tensor as T
from armlab.policy.network import PolicyNet, save_policy
from armlab.policy.types import ObsBatch
from armlab.seeding import derive_seed, rng_for
from armlab.train.config import TrainConfig

log = logging.getLogger(__name__)


def train_step(net: PolicyNet, batch, optimizer_cfg, step: int, seed: int) -> float:
    """One gradient step on one batch; returns the loss value."""
    net.store.zero_grad()
    obs = ObsBatch(images=batch.images, proprio=batch.proprio)
    latents = net.encode_observations(obs, as_tensor=True)
    if net.cfg.head_kind == "diffusion":
        rng = rng_for(seed, "noise", step)
        b = batch.chunks.shape[0]
        t = rng.integers(1, net.cfg.T_train + 1, b)
        eps = rng.standard_normal(batch.chunks.shape).astype(np.float32)
        loss = epsilon_loss_batch(net, latents, batch.chunks, t, eps)
    else:
        loss = l1_loss_batch(net, latents, batch.chunks)
    T.backward(loss)
    nn.adam_step(net.store, optimizer_cfg, step)
    return float(loss.data)


def train(cfg: TrainConfig, data: DatasetIndex, out_dir: str | Path) -> list[Path]:
    """Train one policy; writes checkpoints and train_log.csv, returns ckpt paths.

    Fully deterministic in (cfg, data manifest): batch composition, timestep
    and noise draws all derive from cfg.seed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = cfg.data_filter.apply(data)
    if len(index) == 0:
        raise UsageError("dataset is empty after filtering")
    stats = index.norm_stats()

    pcfg = cfg.policy_config()
    net = PolicyNet(pcfg, seed=derive_seed(cfg.seed, "net-init"))
    net.set_normalization(stats.low, stats.high)
    log.info("training %s head, %d params, %d episodes, %d steps",
             pcfg.head_kind, net.param_count(), len(index), cfg.total_steps)

    ckpts: list[Path] = []
    extra = {"task_id": cfg.task_id, "train": cfg.to_dict()}
    log_path = out / "train_log.csv"
    with open(log_path, "w") as logf:
        logf.write("step,loss,lr\n")
        for step in range(1, cfg.total_steps + 1):
            batch = make_batch(index, cfg.batch_size, pcfg.chunk_len,
                               seed=derive_seed(cfg.seed, "batch", step),
                               cameras=pcfg.cameras, stats=stats)
            loss = train_step(net, batch, cfg.optimizer, step, cfg.seed)
            if not math.isfinite(loss):
                raise TrainDivergence(
                    f"non-finite loss at step {step} (batch {batch.fingerprint()})")
            if step == 1 or step % cfg.log_every == 0 or step == cfg.total_steps:
                lr = nn.learning_rate(step, cfg.optimizer)
                logf.write(f"{step},{loss:.6f},{lr:.8g}\n")
                logf.flush()
            if step % cfg.eval_every == 0:
                path = out / f"ckpt_{step:08d}.ckpt"
                save_policy(path, net, step, extra=extra)
                ckpts.append(path)
                log.info("step %d/%d loss %.4f -> %s", step, cfg.total_steps, loss, path.name)
    return ckpts
