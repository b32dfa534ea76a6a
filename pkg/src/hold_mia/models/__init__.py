"""Score network, training, checkpoints and ROC statistics."""

from __future__ import annotations

from .checkpoint import checkpoint_load, checkpoint_save
from .network import ScoreModel, ScoreNetwork, init_network, net_forward, net_gradient
from .training import TrainConfig, TrainResult, dsm_loss, train

__all__ = [
    "ScoreModel",
    "ScoreNetwork",
    "TrainConfig",
    "TrainResult",
    "checkpoint_load",
    "checkpoint_save",
    "dsm_loss",
    "init_network",
    "net_forward",
    "net_gradient",
    "train",
]
