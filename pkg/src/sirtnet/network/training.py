"""Parameter initialization and the inner training loop."""

from __future__ import annotations

import numpy as np

from .msd import MsdNetwork, mse_loss, mse_loss_gradient, msd_backward, msd_forward
from .optim import AdamState, adam_update

__all__ = ["TrainingDivergedError", "init_uniform", "train_epoch", "evaluate_loss"]


class TrainingDivergedError(RuntimeError):
    """Raised when a training loss stops being finite."""

    def __init__(self, message: str, stage: int | None = None, epoch: int | None = None):
        super().__init__(message)
        self.stage = stage
        self.epoch = epoch


def init_uniform(net: MsdNetwork, lo: float, hi: float, seed) -> MsdNetwork:
    """Fill every weight and bias i.i.d. uniform(lo, hi) from a seeded generator.

    ``seed`` may be anything np.random.default_rng accepts.  Returns the same
    network object with fresh parameters.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    net.set_theta(rng.uniform(lo, hi, net.n_params))
    return net


def evaluate_loss(net: MsdNetwork, inputs, targets, batch_size: int = 10) -> float:
    """Mean per-batch MSE without touching parameters.

    Batching matches train_epoch (in order, last batch at its actual size),
    so the value is comparable with training losses.
    """
    x = np.asarray(inputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if x.shape != t.shape or x.ndim != 3:
        raise ValueError(f"inputs {x.shape} and targets {t.shape} must match as (N, n, n)")
    losses = []
    for start in range(0, x.shape[0], batch_size):
        out, _ = msd_forward(net, x[start : start + batch_size])
        losses.append(mse_loss(out, t[start : start + batch_size]))
    return float(np.mean(losses))


def train_epoch(
    net: MsdNetwork,
    inputs,
    targets,
    batch_size: int,
    adam: AdamState,
    rng,
) -> tuple[MsdNetwork, AdamState, float]:
    """One pass over the dataset: shuffle, then forward/backward/ADAM per batch.

    ``rng`` is a seed or np.random.Generator; the shuffle order is its only
    use, so an evolving generator gives distinct epochs while a fixed seed
    gives a reproducible one.  Returns (net, adam, mean per-batch loss), with
    the last partial batch weighted like any other batch.  Raises
    TrainingDivergedError the moment a batch loss stops being finite.
    """
    x = np.asarray(inputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if x.shape != t.shape or x.ndim != 3:
        raise ValueError(f"inputs {x.shape} and targets {t.shape} must match as (N, n, n)")
    if x.shape[0] == 0:
        raise ValueError("dataset is empty")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    rng = np.random.default_rng(rng)
    order = rng.permutation(x.shape[0])
    losses = []
    for start in range(0, x.shape[0], batch_size):
        idx = order[start : start + batch_size]
        out, tape = msd_forward(net, x[idx])
        loss = mse_loss(out, t[idx])
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"batch loss is {loss} at sample offset {start}")
        grad = msd_backward(net, tape, mse_loss_gradient(out, t[idx]))
        new_theta, adam = adam_update(net.theta, grad, adam)
        net.set_theta(new_theta)
        losses.append(loss)
    return net, adam, float(np.mean(losses))
