from armlab.policy.config import PolicyConfig, PRESETS, preset
from armlab.policy.network import PolicyNet, save_policy, load_policy
from armlab.policy.types import Observation, ObsBatch

__all__ = [
    "PolicyConfig", "PRESETS", "preset",
    "PolicyNet", "save_policy", "load_policy",
    "Observation", "ObsBatch",
]
