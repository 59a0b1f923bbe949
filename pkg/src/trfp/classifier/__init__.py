"""Sequence classifier: recurrent-attention network trained with focal loss."""

from .config import TrainConfig
from .samples import WindowSample, make_training_windows, normalize_per_sample
from .loss import class_weights, focal_loss
from .network import ArchConfig, ClassifierParams, Network, forward, predict
from .train import TrainResult, train
from .model_io import load_model, save_model

__all__ = [
    "TrainConfig",
    "WindowSample",
    "make_training_windows",
    "normalize_per_sample",
    "class_weights",
    "focal_loss",
    "ArchConfig",
    "ClassifierParams",
    "Network",
    "forward",
    "predict",
    "train",
    "TrainResult",
    "save_model",
    "load_model",
]
