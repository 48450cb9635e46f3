from armlab.data.episode import (
    Episode, EpisodeMeta, make_episode, write_episode, read_episode,
    read_header, episodes_equal,
)
from armlab.data.index import (
    DatasetIndex, IndexEntry, NormStats, FilterSpec,
    compute_norm_stats, sample_fraction, filter_by_duration,
)
from armlab.data.batch import Batch, chunk_label, make_batch
from armlab.data.collect import collect_episodes, record_expert_episode

__all__ = [
    "Episode", "EpisodeMeta", "make_episode", "write_episode", "read_episode",
    "read_header", "episodes_equal",
    "DatasetIndex", "IndexEntry", "NormStats", "FilterSpec",
    "compute_norm_stats", "sample_fraction", "filter_by_duration",
    "Batch", "chunk_label", "make_batch",
    "collect_episodes", "record_expert_episode",
]
