"""patchsim: self-supervised ViT pretraining with masked momentum contrast,
point-prompt segmentation by similarity thresholding, and the accompanying
discriminability analyses."""

__version__ = "0.1.0"

from .backbone import BackboneConfig, FeatureSet, VisionTransformer, patchify
from .config import AugmentConfig, LossFlags, RunConfig, TrainConfig
from .losses import LossReport, loss_cls, loss_pat, loss_rec
from .schedules import ema_schedule, lr_schedule

__all__ = [
    "AugmentConfig",
    "BackboneConfig",
    "FeatureSet",
    "LossFlags",
    "LossReport",
    "RunConfig",
    "TrainConfig",
    "VisionTransformer",
    "ema_schedule",
    "loss_cls",
    "loss_pat",
    "loss_rec",
    "lr_schedule",
    "patchify",
]
