"""Batch assembly with action-chunk label extraction.

Each sample draws one (episode, timestep) pair uniformly over all pairs in
the index; the chunk label is the next H actions, padded by repeating the
episode's final action past the end. Actions and proprioception are
normalized with the index statistics; images stay uint8 (the policy
normalizes pixels itself).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from armlab.data.index import DatasetIndex, NormStats
from armlab.errors import ConfigError, UsageError
from armlab.seeding import rng_for


@dataclass
class Batch:
    images: np.ndarray            # [B, ncam, h, w, 3] uint8, `cameras` order
    proprio: np.ndarray           # [B, A] float32, normalized
    chunks: np.ndarray            # [B, H, A] float32, normalized
    pairs: list[tuple[int, int]]  # (episode index, timestep)

    def fingerprint(self) -> str:
        return ",".join(f"{e}:{t}" for e, t in self.pairs)


def chunk_label(actions: np.ndarray, i: int, horizon: int) -> np.ndarray:
    """actions[i : i+H], holding the final action beyond the episode end."""
    n = actions.shape[0]
    if not (0 <= i < n):
        raise UsageError(f"timestep {i} outside episode of length {n}")
    avail = min(horizon, n - i)
    out = np.empty((horizon, actions.shape[1]), dtype=np.float32)
    out[:avail] = actions[i:i + avail]
    if avail < horizon:
        out[avail:] = actions[n - 1]
    return out


def make_batch(index: DatasetIndex, batch_size: int, horizon: int, seed: int,
               cameras: tuple[str, ...] | None = None,
               stats: NormStats | None = None) -> Batch:
    if horizon < 1 or batch_size < 1:
        raise UsageError("batch_size and horizon must be >= 1")
    if len(index) == 0:
        raise UsageError("cannot draw batches from an empty index")
    stats = stats or index.norm_stats()
    lengths = np.array([e.num_steps for e in index.entries])
    cum = np.cumsum(lengths)
    total = int(cum[-1])
    if total == 0:
        raise UsageError("indexed episodes contain no steps")

    rng = rng_for(seed, "batch")
    flat = rng.integers(0, total, size=batch_size)
    pairs: list[tuple[int, int]] = []
    for f in flat:
        e = int(np.searchsorted(cum, f, side="right"))
        t = int(f - (cum[e - 1] if e else 0))
        pairs.append((e, t))

    first_obs = index.episode(pairs[0][0]).steps[pairs[0][1]][0]
    cams = cameras if cameras is not None else tuple(sorted(first_obs.images))
    for cam in cams:
        if cam not in first_obs.images:
            raise ConfigError(f"dataset has no view '{cam}' "
                              f"(has {sorted(first_obs.images)})")
    h, w = first_obs.images[cams[0]].shape[:2]
    a_dim = stats.low.shape[0]

    images = np.empty((batch_size, len(cams), h, w, 3), dtype=np.uint8)
    proprio = np.empty((batch_size, a_dim), dtype=np.float32)
    chunks = np.empty((batch_size, horizon, a_dim), dtype=np.float32)
    for bi, (e, t) in enumerate(pairs):
        ep = index.episode(e)
        obs, _ = ep.steps[t]
        for ci, cam in enumerate(cams):
            images[bi, ci] = obs.images[cam]
        proprio[bi] = stats.normalize(obs.proprio)
        chunks[bi] = stats.normalize(chunk_label(ep.actions(), t, horizon))
    return Batch(images=images, proprio=proprio, chunks=chunks, pairs=pairs)
