"""Run configuration: one human-readable YAML file drives every CLI entry point."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .backbone import PRESETS, BackboneConfig
from .errors import RejectedInput


@dataclass(frozen=True)
class AugmentConfig:
    global_crops: int = 2
    local_crops: int = 0
    local_size: int = 24
    crop_scale: tuple[float, float] = (0.6, 1.0)
    jitter: tuple[float, float, float] = (0.4, 0.4, 0.4)
    blur_prob: float = 0.5
    blur_sigma: tuple[float, float] = (0.1, 2.0)
    solarize_prob: float = 0.2
    mask_ratio: float = 0.5
    donor_prob: float = 0.35

    def __post_init__(self):
        if self.global_crops < 1:
            raise RejectedInput("need at least one global crop")
        if not 0.0 <= self.mask_ratio <= 1.0:
            raise RejectedInput("mask_ratio must be in [0, 1]")


@dataclass(frozen=True)
class LossFlags:
    rec: bool = True
    cls: bool = True
    pat: bool = True

    def __post_init__(self):
        if not (self.rec or self.cls or self.pat):
            raise RejectedInput("at least one loss must be enabled")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2
    batch_size: int = 32
    lr_peak: float = 7.5e-4
    lr_min: float = 1e-6
    warmup_frac: float = 0.05
    weight_decay: float = 0.04
    ema_start: float = 0.996
    ema_end: float = 1.0
    temperature: float = 0.2
    grad_clip: float = 3.0
    head_hidden: int = 256
    head_dim: int = 64
    checkpoint_every: int = 0  # epochs between checkpoints; 0 = final only
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise RejectedInput("temperature must be positive")
        if not 0.996 <= self.ema_start <= self.ema_end <= 1.0:
            raise RejectedInput("EMA momentum must rise within [0.996, 1.0]")


@dataclass(frozen=True)
class RunConfig:
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    losses: LossFlags = field(default_factory=LossFlags)
    train: TrainConfig = field(default_factory=TrainConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        def build(cls, value):
            if value is None:
                return cls()
            fields = {f.name: f.type for f in dataclasses.fields(cls)}
            unknown = set(value) - set(fields)
            if unknown:
                raise RejectedInput(f"unknown {cls.__name__} keys: {sorted(unknown)}")
            coerced = {
                k: tuple(v) if isinstance(v, list) else v for k, v in value.items()
            }
            return cls(**coerced)

        backbone = d.get("backbone")
        if isinstance(backbone, str):
            if backbone not in PRESETS:
                raise RejectedInput(f"unknown backbone preset {backbone!r}")
            bb = PRESETS[backbone]
        else:
            bb = build(BackboneConfig, backbone)
        return RunConfig(
            backbone=bb,
            augment=build(AugmentConfig, d.get("augment")),
            losses=build(LossFlags, d.get("losses")),
            train=build(TrainConfig, d.get("train")),
        )

    @staticmethod
    def from_yaml(path) -> "RunConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        return RunConfig.from_dict(data)

    def to_yaml(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)


def config_hash(cfg: RunConfig) -> str:
    """Stable hash of the canonical JSON form of a run configuration."""
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
