"""Mixed-scale dense convolutional network with exact reverse-mode gradients,
trained with ADAM on an MSE objective.  Self-contained numpy implementation."""

from .msd import (
    ConvKernel,
    MsdNetwork,
    Tape,
    conv2d_dilated,
    mse_loss,
    msd_backward,
    msd_forward,
    parameter_count,
)
from .optim import AdamState, adam_update
from .training import TrainingDivergedError, evaluate_loss, init_uniform, train_epoch
from .io import load_checkpoint, save_checkpoint

__all__ = [
    "ConvKernel",
    "MsdNetwork",
    "Tape",
    "conv2d_dilated",
    "mse_loss",
    "msd_forward",
    "msd_backward",
    "parameter_count",
    "AdamState",
    "adam_update",
    "TrainingDivergedError",
    "init_uniform",
    "train_epoch",
    "evaluate_loss",
    "save_checkpoint",
    "load_checkpoint",
]
