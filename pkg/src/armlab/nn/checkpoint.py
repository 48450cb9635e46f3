"""Checkpoint container.

Layout: magic "CKPT1", little-endian u32 manifest length, JSON manifest
(config, step, parameter names/shapes), then raw little-endian float32 data
for each parameter in manifest order. The manifest JSON is written with
sorted keys so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from armlab.errors import CorruptFileError, SchemaError
from armlab.nn.layers import ParamStore

MAGIC = b"CKPT1"


def save_checkpoint(path: str | Path, store: ParamStore, config: dict, step: int) -> None:
    names = sorted(store.params)
    manifest = {
        "config": config,
        "step": step,
        "params": [{"name": n, "shape": list(store.params[n].data.shape)} for n in names],
    }
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(store.params[n].data, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Returns (params by name, manifest)."""
    raw = Path(path).read_bytes()
    if raw[:5] != MAGIC:
        raise CorruptFileError(f"{path}: bad checkpoint magic", offset=0)
    if len(raw) < 9:
        raise CorruptFileError(f"{path}: truncated header", offset=len(raw))
    (mlen,) = struct.unpack_from("<I", raw, 5)
    end = 9 + mlen
    if len(raw) < end:
        raise CorruptFileError(f"{path}: truncated manifest", offset=len(raw))
    manifest = json.loads(raw[9:end].decode("utf-8"))
    params: dict[str, np.ndarray] = {}
    off = end
    for entry in manifest["params"]:
        shape = tuple(entry["shape"])
        nbytes = 4 * int(np.prod(shape)) if shape else 4
        if len(raw) < off + nbytes:
            raise CorruptFileError(f"{path}: truncated parameter '{entry['name']}'", offset=len(raw))
        params[entry["name"]] = np.frombuffer(raw, dtype="<f4", count=nbytes // 4,
                                              offset=off).reshape(shape).copy()
        off += nbytes
    if off != len(raw):
        raise CorruptFileError(f"{path}: {len(raw) - off} trailing bytes", offset=off)
    return params, manifest


def restore_into(store: ParamStore, params: dict[str, np.ndarray]) -> None:
    """Load checkpoint arrays into an already-constructed store."""
    missing = set(store.params) - set(params)
    extra = set(params) - set(store.params)
    if missing or extra:
        raise SchemaError(f"checkpoint/config mismatch: missing={sorted(missing)[:4]} "
                          f"extra={sorted(extra)[:4]}")
    for name, value in params.items():
        if store.params[name].data.shape != value.shape:
            raise SchemaError(f"checkpoint shape mismatch for '{name}': "
                              f"{value.shape} vs {store.params[name].data.shape}")
        store.params[name].data = value.astype(store.dtype)
