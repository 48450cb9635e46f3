"""One-file-per-episode container ("ADEP1").

Layout, all little-endian:
  magic "ADEP1" | u32 header length | JSON header | step records | u32 CRC32

The JSON header carries meta (task, control_hz, collector, duration, seed),
the view shapes, action/proprio dims and the step count. Each step record is
the raw image bytes per view (header order), then proprio and action as
float32. The trailing CRC32 covers the step records, so any payload
corruption is detected on read. Header JSON is dumped with sorted keys:
identical episodes serialize to identical bytes.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from armlab.errors import CorruptFileError
from armlab.policy.types import Observation

MAGIC = b"ADEP1"


@dataclass(frozen=True)
class EpisodeMeta:
    task_id: str
    control_hz: int
    collector: str            # "scripted:<mode>" or "teleop:<session>"
    seed: int
    duration: float           # seconds == num_steps / control_hz

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "control_hz": self.control_hz,
                "collector": self.collector, "seed": self.seed, "duration": self.duration}

    @staticmethod
    def from_dict(d: dict) -> "EpisodeMeta":
        return EpisodeMeta(task_id=d["task_id"], control_hz=d["control_hz"],
                           collector=d["collector"], seed=d["seed"], duration=d["duration"])


@dataclass
class Episode:
    meta: EpisodeMeta
    steps: list[tuple[Observation, np.ndarray]] = field(default_factory=list)

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    def actions(self) -> np.ndarray:
        if not self.steps:
            return np.zeros((0, 0), dtype=np.float32)
        return np.stack([a for _, a in self.steps]).astype(np.float32)


def make_episode(task_id: str, control_hz: int, collector: str, seed: int,
                 steps: list[tuple[Observation, np.ndarray]]) -> Episode:
    meta = EpisodeMeta(task_id=task_id, control_hz=control_hz, collector=collector,
                       seed=seed, duration=len(steps) / control_hz)
    return Episode(meta=meta, steps=steps)


def _header_dict(ep: Episode) -> dict:
    views = []
    action_dim = proprio_dim = 0
    if ep.steps:
        obs, action = ep.steps[0]
        views = [{"id": vid, "h": int(img.shape[0]), "w": int(img.shape[1])}
                 for vid, img in sorted(obs.images.items())]
        action_dim = int(np.asarray(action).shape[0])
        proprio_dim = int(obs.proprio.shape[0])
    return {"meta": ep.meta.to_dict(), "views": views,
            "action_dim": action_dim, "proprio_dim": proprio_dim,
            "num_steps": ep.num_steps}


def write_episode(ep: Episode, path: str | Path) -> None:
    header = _header_dict(ep)
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = bytearray()
    for obs, action in ep.steps:
        for view in header["views"]:
            img = obs.images[view["id"]]
            if img.shape != (view["h"], view["w"], 3) or img.dtype != np.uint8:
                raise CorruptFileError(f"inconsistent image for view '{view['id']}'")
            payload += img.tobytes()
        payload += np.asarray(obs.proprio, dtype="<f4").tobytes()
        payload += np.asarray(action, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(payload)))


def read_header(path: str | Path) -> dict:
    """Parse only the JSON header (cheap; used for indexing)."""
    with open(path, "rb") as f:
        magic = f.read(5)
        if magic != MAGIC:
            raise CorruptFileError(f"{path}: bad magic {magic!r}", offset=0)
        raw = f.read(4)
        if len(raw) < 4:
            raise CorruptFileError(f"{path}: truncated header length", offset=5)
        (hlen,) = struct.unpack("<I", raw)
        blob = f.read(hlen)
        if len(blob) < hlen:
            raise CorruptFileError(f"{path}: truncated header", offset=9 + len(blob))
        try:
            return json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CorruptFileError(f"{path}: unreadable header ({e})", offset=9) from e


def read_episode(path: str | Path) -> Episode:
    raw = Path(path).read_bytes()
    header = read_header(path)
    (hlen,) = struct.unpack_from("<I", raw, 5)
    body = 9 + hlen
    views = header["views"]
    pdim, adim = header["proprio_dim"], header["action_dim"]
    step_bytes = sum(v["h"] * v["w"] * 3 for v in views) + 4 * (pdim + adim)
    expected = body + header["num_steps"] * step_bytes + 4
    if len(raw) != expected:
        raise CorruptFileError(
            f"{path}: expected {expected} bytes, found {len(raw)}", offset=min(len(raw), expected))
    payload = raw[body:-4]
    (crc_stored,) = struct.unpack_from("<I", raw, len(raw) - 4)
    crc = zlib.crc32(payload)
    if crc != crc_stored:
        raise CorruptFileError(
            f"{path}: CRC mismatch (stored {crc_stored:#x}, computed {crc:#x})",
            offset=len(raw) - 4)

    steps: list[tuple[Observation, np.ndarray]] = []
    off = 0
    for _ in range(header["num_steps"]):
        images = {}
        for v in views:
            nbytes = v["h"] * v["w"] * 3
            images[v["id"]] = np.frombuffer(
                payload, dtype=np.uint8, count=nbytes, offset=off
            ).reshape(v["h"], v["w"], 3).copy()
            off += nbytes
        proprio = np.frombuffer(payload, dtype="<f4", count=pdim, offset=off).copy()
        off += 4 * pdim
        action = np.frombuffer(payload, dtype="<f4", count=adim, offset=off).copy()
        off += 4 * adim
        steps.append((Observation(images=images, proprio=proprio), action))
    return Episode(meta=EpisodeMeta.from_dict(header["meta"]), steps=steps)


def episodes_equal(a: Episode, b: Episode) -> bool:
    if a.meta != b.meta or a.num_steps != b.num_steps:
        return False
    for (oa, aa), (ob, ab) in zip(a.steps, b.steps):
        if set(oa.images) != set(ob.images):
            return False
        if any(not np.array_equal(oa.images[k], ob.images[k]) for k in oa.images):
            return False
        if not np.array_equal(oa.proprio, ob.proprio) or not np.array_equal(aa, ab):
            return False
    return True
