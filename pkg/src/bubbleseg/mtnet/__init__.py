from .augment import AugmentConfig, IDENTITY, augment
from .checkpoint import load_checkpoint, save_checkpoint
from .losses import LossConfig, dice_loss, wbce_loss
from .model import NetConfig, backward, forward, init_params, param_shapes
from .targets import targets_from_annotation
from .train import EpochLog, TrainConfig, log_to_csv, sample_losses_and_grads, train

__all__ = [
    "AugmentConfig", "IDENTITY", "augment",
    "load_checkpoint", "save_checkpoint",
    "LossConfig", "dice_loss", "wbce_loss",
    "NetConfig", "backward", "forward", "init_params", "param_shapes",
    "targets_from_annotation",
    "EpochLog", "TrainConfig", "log_to_csv", "sample_losses_and_grads", "train",
]
