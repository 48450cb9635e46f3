"""Deterministic seed derivation.

Every stochastic subsystem (placement randomization, expert jitter, batch
sampling, sampler noise, ...) draws from its own numpy Generator whose seed
is derived from a master seed plus a label path via a splitmix64 walk. This
keeps runs reproducible while decoupling the random streams: adding draws in
one subsystem never shifts another subsystem's stream.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state once; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _fold_bytes(state: int, payload: bytes) -> int:
    # FNV-1a over the payload, then one splitmix step to mix it in.
    h = 0xCBF29CE484222325
    for b in payload:
        h = ((h ^ b) * 0x100000001B3) & _MASK
    state, out = splitmix64((state ^ h) & _MASK)
    return out


def derive_seed(master: int, *labels: int | str) -> int:
    """Derive a 64-bit seed from a master seed and a label path."""
    state = master & _MASK
    for label in labels:
        if isinstance(label, int):
            payload = label.to_bytes(16, "little", signed=True)
        else:
            payload = label.encode("utf-8")
        state = _fold_bytes(state, payload)
    return state


def rng_for(master: int, *labels: int | str) -> np.random.Generator:
    """A fresh PCG64 generator for one subsystem stream."""
    return np.random.Generator(np.random.PCG64(derive_seed(master, *labels)))
