"""Dataset index: an ordered view over episode files plus cached metadata.

Curation operations (random-fraction subsampling, duration-percentile
filtering) return new index views and never touch episode files. Entries are
always kept sorted by path so index order is stable across reloads.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from armlab.data.episode import Episode, read_episode, read_header
from armlab.errors import SchemaError, UsageError
from armlab.seeding import rng_for

MANIFEST_FORMAT = "armlab-dataset/v1"


@dataclass(frozen=True)
class IndexEntry:
    path: str
    task_id: str
    control_hz: int
    num_steps: int
    duration: float
    collector: str = ""
    seed: int = 0

    def to_dict(self) -> dict:
        return {"path": self.path, "task_id": self.task_id, "control_hz": self.control_hz,
                "num_steps": self.num_steps, "duration": self.duration,
                "collector": self.collector, "seed": self.seed}

    @staticmethod
    def from_dict(d: dict) -> "IndexEntry":
        return IndexEntry(**d)


@dataclass(frozen=True)
class NormStats:
    low: np.ndarray
    high: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return ~(self.high > self.low)

    def normalize(self, a: np.ndarray) -> np.ndarray:
        span = self.high - self.low
        safe = np.where(span > 0, span, 1.0)
        out = 2.0 * (a - self.low) / safe - 1.0
        return np.where(span > 0, out, 0.0).astype(np.float32)

    def denormalize(self, a: np.ndarray) -> np.ndarray:
        span = self.high - self.low
        mid = (self.low + self.high) * 0.5
        return np.where(span > 0, (a + 1.0) * 0.5 * span + self.low, mid).astype(np.float32)

    def to_dict(self) -> dict:
        return {"low": [float(v) for v in self.low], "high": [float(v) for v in self.high]}

    @staticmethod
    def from_dict(d: dict) -> "NormStats":
        return NormStats(low=np.asarray(d["low"], dtype=np.float32),
                         high=np.asarray(d["high"], dtype=np.float32))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("dim,low,high,degenerate\n")
        for i, (lo, hi) in enumerate(zip(self.low, self.high)):
            buf.write(f"{i},{lo:.9g},{hi:.9g},{int(not hi > lo)}\n")
        return buf.getvalue()


class DatasetIndex:
    def __init__(self, entries: list[IndexEntry], root: Path | None = None):
        self.entries = sorted(entries, key=lambda e: e.path)
        self.root = root
        self._cache: dict[str, Episode] = {}
        self._stats: NormStats | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def paths(self) -> list[str]:
        return [e.path for e in self.entries]

    def durations(self) -> np.ndarray:
        return np.array([e.duration for e in self.entries])

    def _resolve(self, path: str) -> Path:
        p = Path(path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p

    def episode(self, i: int) -> Episode:
        path = self.entries[i].path
        ep = self._cache.get(path)
        if ep is None:
            ep = read_episode(self._resolve(path))
            self._cache[path] = ep
        return ep

    # -- construction / persistence --------------------------------------

    @staticmethod
    def from_dir(root: str | Path) -> "DatasetIndex":
        root = Path(root)
        entries = []
        for path in sorted(root.glob("*.adep")):
            h = read_header(path)
            entries.append(IndexEntry(
                path=path.name, task_id=h["meta"]["task_id"],
                control_hz=h["meta"]["control_hz"], num_steps=h["num_steps"],
                duration=h["meta"]["duration"], collector=h["meta"]["collector"],
                seed=h["meta"]["seed"]))
        return DatasetIndex(entries, root=root)

    def save_manifest(self, path: str | Path) -> None:
        doc = {"format": MANIFEST_FORMAT,
               "entries": [e.to_dict() for e in self.entries]}
        Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")

    @staticmethod
    def load_manifest(path: str | Path) -> "DatasetIndex":
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != MANIFEST_FORMAT:
            raise SchemaError(f"{path}: not a {MANIFEST_FORMAT} manifest")
        return DatasetIndex([IndexEntry.from_dict(d) for d in doc["entries"]],
                            root=Path(path).parent)

    # -- statistics -------------------------------------------------------

    def norm_stats(self) -> NormStats:
        if self._stats is None:
            self._stats = compute_norm_stats(self)
        return self._stats


def compute_norm_stats(index: DatasetIndex) -> NormStats:
    """Per-action-dimension min/max over every step of the indexed episodes."""
    if len(index) == 0:
        raise UsageError("cannot compute stats over an empty index")
    low: np.ndarray | None = None
    high: np.ndarray | None = None
    for i in range(len(index)):
        acts = index.episode(i).actions()
        if acts.size == 0:
            continue
        lo, hi = acts.min(axis=0), acts.max(axis=0)
        low = lo if low is None else np.minimum(low, lo)
        high = hi if high is None else np.maximum(high, hi)
    if low is None:
        raise UsageError("no steps in any indexed episode")
    return NormStats(low=low.astype(np.float32), high=high.astype(np.float32))


def sample_fraction(index: DatasetIndex, fraction: float, seed: int) -> DatasetIndex:
    """Uniform subsample without replacement of floor(fraction * N) episodes."""
    if not (0.0 < fraction <= 1.0):
        raise UsageError(f"fraction must lie in (0, 1], got {fraction}")
    if len(index) == 0:
        raise UsageError("cannot sample from an empty index")
    if fraction == 1.0:
        return DatasetIndex(list(index.entries), root=index.root)
    k = int(fraction * len(index))
    rng = rng_for(seed, "sample-fraction")
    chosen = rng.choice(len(index), size=k, replace=False)
    return DatasetIndex([index.entries[i] for i in sorted(chosen)], root=index.root)


def filter_by_duration(index: DatasetIndex, percentile: float) -> DatasetIndex:
    """Keep the shortest floor(percentile/100 * N) episodes, stable ties."""
    if not (0.0 < percentile <= 100.0):
        raise UsageError(f"percentile must lie in (0, 100], got {percentile}")
    k = int(percentile / 100.0 * len(index))
    order = np.argsort(index.durations(), kind="stable")[:k]
    return DatasetIndex([index.entries[i] for i in order], root=index.root)


@dataclass(frozen=True)
class FilterSpec:
    """Dataset curation: random fraction first, then duration percentile."""
    fraction: float = 1.0
    fraction_seed: int = 0
    duration_percentile: float | None = None

    def __post_init__(self):
        if not (0.0 < self.fraction <= 1.0):
            raise UsageError(f"fraction must lie in (0, 1], got {self.fraction}")
        if self.duration_percentile is not None and not (0.0 < self.duration_percentile <= 100.0):
            raise UsageError("duration_percentile must lie in (0, 100]")

    def apply(self, index: DatasetIndex) -> DatasetIndex:
        out = sample_fraction(index, self.fraction, self.fraction_seed)
        if self.duration_percentile is not None:
            out = filter_by_duration(out, self.duration_percentile)
        return out

    def to_dict(self) -> dict:
        return {"fraction": self.fraction, "fraction_seed": self.fraction_seed,
                "duration_percentile": self.duration_percentile}

    @staticmethod
    def from_dict(d: dict) -> "FilterSpec":
        return FilterSpec(**d)
