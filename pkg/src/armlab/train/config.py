"""Training run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from armlab.data.index import FilterSpec
from armlab.errors import ConfigError
from armlab.nn.layers import BackboneConfig
from armlab.nn.optim import OptimizerConfig
from armlab.policy.config import PolicyConfig, preset


@dataclass(frozen=True)
class TrainConfig:
    task_id: str = "single_insertion"
    policy_preset: str = "desk-xs-lowres"
    policy_overrides: dict = field(default_factory=dict)
    optimizer: OptimizerConfig = OptimizerConfig()
    batch_size: int = 64
    total_steps: int = 50_000
    eval_every: int = 5_000
    rollouts_per_eval: int = 50
    eval_seeds: int = 3
    inference_steps: int = 50
    data_filter: FilterSpec = FilterSpec()
    seed: int = 0
    log_every: int = 50

    def __post_init__(self):
        if self.total_steps < 1 or self.batch_size < 1:
            raise ConfigError("total_steps and batch_size must be >= 1")
        if self.eval_every < 1 or self.total_steps % self.eval_every != 0:
            raise ConfigError("eval_every must divide total_steps")
        if self.rollouts_per_eval < 1 or self.eval_seeds < 1:
            raise ConfigError("rollouts_per_eval and eval_seeds must be >= 1")
        # keep overrides in JSON form so run configs serialize cleanly
        ov = dict(self.policy_overrides)
        if isinstance(ov.get("backbone"), BackboneConfig):
            ov["backbone"] = ov["backbone"].to_dict()
        for key in ("cameras", "image_hw"):
            if key in ov:
                ov[key] = list(ov[key])
        object.__setattr__(self, "policy_overrides", ov)
        self.policy_config()  # fail fast on bad overrides

    def policy_config(self) -> PolicyConfig:
        ov = dict(self.policy_overrides)
        if "backbone" in ov:
            ov["backbone"] = BackboneConfig.from_dict(ov["backbone"])
        for key in ("cameras", "image_hw"):
            if key in ov:
                ov[key] = tuple(ov[key])
        return preset(self.policy_preset, **ov)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "policy_preset": self.policy_preset,
            "policy_overrides": dict(self.policy_overrides),
            "optimizer": self.optimizer.to_dict(),
            "batch_size": self.batch_size,
            "total_steps": self.total_steps,
            "eval_every": self.eval_every,
            "rollouts_per_eval": self.rollouts_per_eval,
            "eval_seeds": self.eval_seeds,
            "inference_steps": self.inference_steps,
            "data_filter": self.data_filter.to_dict(),
            "seed": self.seed,
            "log_every": self.log_every,
        }

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        d = dict(d)
        d["optimizer"] = OptimizerConfig.from_dict(d["optimizer"])
        d["data_filter"] = FilterSpec.from_dict(d["data_filter"])
        return TrainConfig(**d)
