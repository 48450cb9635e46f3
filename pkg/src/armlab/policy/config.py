"""Policy network configuration and named presets."""

from __future__ import annotations

from dataclasses import dataclass, replace

from armlab.errors import ConfigError
from armlab.nn.layers import BackboneConfig, StageConfig


@dataclass(frozen=True)
class PolicyConfig:
    cameras: tuple[str, ...] = ("overhead", "wrist_left", "wrist_right")
    image_hw: tuple[int, int] = (64, 64)
    chunk_len: int = 50
    action_dim: int = 8
    model_dim: int = 128
    encoder_layers: int = 3
    encoder_heads: int = 4
    decoder_layers: int = 3
    decoder_heads: int = 4
    mlp_ratio: int = 4
    T_train: int = 50
    share_backbones: bool = False
    head_kind: str = "diffusion"
    backbone: BackboneConfig = BackboneConfig()

    def __post_init__(self):
        if self.chunk_len < 1 or self.action_dim < 1:
            raise ConfigError("chunk_len and action_dim must be >= 1")
        if self.model_dim % self.encoder_heads or self.model_dim % self.decoder_heads:
            raise ConfigError("model_dim must be divisible by the head counts")
        if self.head_kind not in ("diffusion", "l1"):
            raise ConfigError(f"unknown head_kind '{self.head_kind}'")
        h, w = self.image_hw
        s = self.backbone.total_stride
        if self.cameras and (h % s or w % s):
            raise ConfigError(f"image {h}x{w} not divisible by backbone stride {s}")

    @property
    def num_cameras(self) -> int:
        return len(self.cameras)

    @property
    def feature_hw(self) -> tuple[int, int]:
        s = self.backbone.total_stride
        return self.image_hw[0] // s, self.image_hw[1] // s

    @property
    def tokens_per_camera(self) -> int:
        fh, fw = self.feature_hw
        return fh * fw

    @property
    def token_count(self) -> int:
        # one token per spatial feature per camera, plus the proprio token
        return self.num_cameras * self.tokens_per_camera + 1

    def to_dict(self) -> dict:
        return {
            "cameras": list(self.cameras), "image_hw": list(self.image_hw),
            "chunk_len": self.chunk_len, "action_dim": self.action_dim,
            "model_dim": self.model_dim,
            "encoder_layers": self.encoder_layers, "encoder_heads": self.encoder_heads,
            "decoder_layers": self.decoder_layers, "decoder_heads": self.decoder_heads,
            "mlp_ratio": self.mlp_ratio, "T_train": self.T_train,
            "share_backbones": self.share_backbones, "head_kind": self.head_kind,
            "backbone": self.backbone.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "PolicyConfig":
        d = dict(d)
        d["cameras"] = tuple(d["cameras"])
        d["image_hw"] = tuple(d["image_hw"])
        d["backbone"] = BackboneConfig.from_dict(d["backbone"])
        return PolicyConfig(**d)


def _paper_base() -> PolicyConfig:
    return PolicyConfig(
        cameras=("cam0", "cam1", "cam2", "cam3"),
        image_hw=(480, 640),
        chunk_len=50, action_dim=14, model_dim=512,
        encoder_layers=4, encoder_heads=8, decoder_layers=4, decoder_heads=8,
        T_train=50, share_backbones=False,
        backbone=BackboneConfig(
            stem_channels=64, stem_stride=2,
            stages=(StageConfig(128, 1, 2), StageConfig(256, 1, 2),
                    StageConfig(512, 1, 2), StageConfig(512, 1, 2))),
    )


def _desk_s() -> PolicyConfig:
    return PolicyConfig()


def _desk_xs_lowres() -> PolicyConfig:
    return PolicyConfig(
        cameras=("overhead",),
        image_hw=(48, 48),
        model_dim=64,
        encoder_layers=2, encoder_heads=4, decoder_layers=2, decoder_heads=4,
        mlp_ratio=2,
        share_backbones=True,
        backbone=BackboneConfig(
            stem_channels=8, stem_stride=2,
            stages=(StageConfig(16, 1, 2), StageConfig(32, 1, 2),
                    StageConfig(64, 1, 2))),
    )


PRESETS = {
    "paper-base": _paper_base,
    "desk-s": _desk_s,
    "desk-xs-lowres": _desk_xs_lowres,
}


def preset(name: str, **overrides) -> PolicyConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (have {sorted(PRESETS)})")
    cfg = PRESETS[name]()
    return replace(cfg, **overrides) if overrides else cfg
