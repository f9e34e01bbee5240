"""Interleaved SIRT + network reconstruction and the sequential training
procedure behind it.

Inference alternates N SIRT iterations with a learned residual correction,
stage by stage, optionally closing with one more SIRT block.  Training walks
the same structure: each stage's network learns to map that stage's SIRT
output to the ground-truth residual, with stage s initialized from the stage
s-1 checkpoint.  Stage inputs are recomputed from the frozen prefix by
default so training data always matches what inference would produce; an
in-memory cache flag shortcuts the recomputation without changing results.

Trained parameters are rounded to float32 (the checkpoint storage precision)
before any later stage consumes them, which makes recomputing stage inputs
from a saved checkpoint bitwise identical to the training-time inputs.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import re

import numpy as np

from .geometry import ProjectionGeometry
from .network import (
    AdamState,
    MsdNetwork,
    TrainingDivergedError,
    evaluate_loss,
    init_uniform,
    load_checkpoint,
    save_checkpoint,
    train_epoch,
)
from .network.msd import msd_forward
from .solvers import sirt_run
from .validation import check_image_stack, check_sinogram_stack

__all__ = [
    "PipelineConfig",
    "PipelineCheckpoint",
    "residual_target",
    "apply_regularization",
    "train_pipeline",
    "reconstruct",
    "save_pipeline",
    "load_pipeline",
    "TrainingDivergedError",
]


@dataclasses.dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the interleaved reconstruction pipeline.

    ``n_stages`` networks alternate with ``sirt_iters_per_block``-iteration
    SIRT blocks; full-scale defaults follow the reference configuration
    (10 stages, 100 epochs, depth 51), desk-scale runs shrink them.
    """

    sirt_iters_per_block: int = 10
    n_stages: int = 10
    epochs_per_stage: int = 100
    final_sirt: bool = True
    depth: int = 15
    dilation_period: int = 10
    batch_size: int = 10
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_lo: float = -0.25
    init_hi: float = 0.25
    seed: int = 0
    cache_stage_inputs: bool = False

    def __post_init__(self):
        if self.sirt_iters_per_block < 1:
            raise ValueError(f"sirt_iters_per_block must be >= 1, got {self.sirt_iters_per_block}")
        if self.n_stages < 0:
            raise ValueError(f"n_stages must be >= 0, got {self.n_stages}")
        if self.epochs_per_stage < 1:
            raise ValueError(f"epochs_per_stage must be >= 1, got {self.epochs_per_stage}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.init_lo < self.init_hi:
            raise ValueError(f"need init_lo < init_hi, got [{self.init_lo}, {self.init_hi}]")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown pipeline config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclasses.dataclass
class PipelineCheckpoint:
    """A trained pipeline: config, geometry, the stage networks in order, and
    the per-stage loss curves as (stage, epoch, train_loss, val_loss) rows."""

    config: PipelineConfig
    geom: ProjectionGeometry
    nets: list
    losses: list

    def initial_val_losses(self) -> list:
        """Epoch-1 validation loss of each stage, in stage order."""
        first = {}
        for stage, epoch, _, val in self.losses:
            if epoch == 1:
                first[stage] = val
        return [first[s] for s in sorted(first)]


def residual_target(gt, x_after_sirt) -> np.ndarray:
    """Training target for a stage network: ground truth minus SIRT output."""
    gt = np.asarray(gt)
    x = np.asarray(x_after_sirt)
    if gt.shape != x.shape:
        raise ValueError(f"shape mismatch: gt {gt.shape} vs reconstruction {x.shape}")
    return gt - x


def apply_regularization(x, net: MsdNetwork) -> np.ndarray:
    """Add the network's predicted residual to the reconstruction.

    Accepts a single (n, n) image or a (batch, n, n) stack.
    """
    arr = np.asarray(x, dtype=np.float64)
    out, _ = msd_forward(net, arr)
    return arr + out


def _round_to_storage(net: MsdNetwork) -> None:
    """Clamp parameters to checkpoint (float32) precision in place."""
    net.set_theta(net.theta.astype(np.float32).astype(np.float64))


def _sirt_block(x_stack: np.ndarray, sinos: np.ndarray, geom, n_iters: int) -> np.ndarray:
    out = np.empty_like(x_stack)
    for i in range(x_stack.shape[0]):
        out[i] = sirt_run(x_stack[i], sinos[i], geom, n_iters)
    return out


def _stage_inputs(
    sinos: np.ndarray, geom, config: PipelineConfig, nets: list, upto_stage: int
) -> np.ndarray:
    """Reconstructions entering the ``upto_stage``-th network (1-based):
    the pipeline prefix through that stage's SIRT block."""
    n = geom.image_size
    x = np.zeros((sinos.shape[0], n, n), dtype=np.float64)
    for s in range(upto_stage):
        x = _sirt_block(x, sinos, geom, config.sirt_iters_per_block)
        if s < upto_stage - 1:
            x = apply_regularization(x, nets[s])
    return x


def train_pipeline(train_set, val_set, geom: ProjectionGeometry, config: PipelineConfig,
                   progress=None) -> PipelineCheckpoint:
    """Train the stage networks in sequence; returns the full checkpoint.

    ``train_set`` and ``val_set`` are (images, sinograms) pairs of stacks.
    ``progress``, when given, is called with a dict after every epoch.

    Raises TrainingDivergedError with stage/epoch context if a loss stops
    being finite.
    """
    if config.n_stages < 1:
        raise ValueError("training needs n_stages >= 1")
    train_images, train_sinos = train_set
    val_images, val_sinos = val_set
    train_images = check_image_stack(train_images, geom, name="train images").astype(np.float64)
    val_images = check_image_stack(val_images, geom, name="validation images").astype(np.float64)
    train_sinos = check_sinogram_stack(train_sinos, geom, name="train sinograms").astype(np.float64)
    val_sinos = check_sinogram_stack(val_sinos, geom, name="validation sinograms").astype(np.float64)
    if train_images.shape[0] != train_sinos.shape[0]:
        raise ValueError("train images and sinograms disagree on sample count")
    if val_images.shape[0] != val_sinos.shape[0]:
        raise ValueError("validation images and sinograms disagree on sample count")
    if train_images.shape[0] == 0 or val_images.shape[0] == 0:
        raise ValueError("training and validation sets must be nonempty")

    shuffle_rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 0]))
    init_seed = np.random.SeedSequence([int(config.seed), 1])

    nets: list[MsdNetwork] = []
    losses: list[tuple[int, int, float, float]] = []
    train_x = None
    val_x = None
    for stage in range(1, config.n_stages + 1):
        if config.cache_stage_inputs and train_x is not None:
            train_x = _sirt_block(train_x, train_sinos, geom, config.sirt_iters_per_block)
            val_x = _sirt_block(val_x, val_sinos, geom, config.sirt_iters_per_block)
        else:
            train_x = _stage_inputs(train_sinos, geom, config, nets, stage)
            val_x = _stage_inputs(val_sinos, geom, config, nets, stage)
        train_t = residual_target(train_images, train_x)
        val_t = residual_target(val_images, val_x)

        net = MsdNetwork(depth=config.depth, dilation_period=config.dilation_period)
        if stage == 1:
            init_uniform(net, config.init_lo, config.init_hi, seed=init_seed)
        else:
            net.set_theta(nets[-1].theta)
        adam = AdamState.for_params(
            net.n_params, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps
        )
        for epoch in range(1, config.epochs_per_stage + 1):
            try:
                net, adam, train_loss = train_epoch(
                    net, train_x, train_t, config.batch_size, adam, shuffle_rng
                )
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(
                    f"stage {stage} epoch {epoch}: {exc}", stage=stage, epoch=epoch
                ) from exc
            val_loss = evaluate_loss(net, val_x, val_t, config.batch_size)
            if not np.isfinite(val_loss):
                raise TrainingDivergedError(
                    f"stage {stage} epoch {epoch}: validation loss is {val_loss}",
                    stage=stage,
                    epoch=epoch,
                )
            losses.append((stage, epoch, float(train_loss), float(val_loss)))
            if progress is not None:
                progress(
                    {
                        "stage": stage,
                        "epoch": epoch,
                        "train_loss": float(train_loss),
                        "val_loss": float(val_loss),
                    }
                )
        _round_to_storage(net)
        nets.append(net)
        if config.cache_stage_inputs:
            # Advance the cache past this stage's network so the next stage
            # only needs its own SIRT block.  Uses the rounded parameters,
            # exactly like a recomputation from the checkpoint would.
            train_x = apply_regularization(train_x, net)
            val_x = apply_regularization(val_x, net)
    return PipelineCheckpoint(config=config, geom=geom, nets=nets, losses=losses)


def reconstruct(p, geom: ProjectionGeometry, checkpoint: PipelineCheckpoint):
    """Run the full interleaved reconstruction on one sinogram.

    Returns (final image, intermediates) where intermediates is an ordered
    list of (label, image) pairs holding the output of every SIRT block and
    every network correction: 2 * n_stages entries plus one more when the
    closing SIRT block is enabled.
    """
    if checkpoint.geom != geom:
        raise ValueError("checkpoint geometry does not match the sinogram's geometry")
    config = checkpoint.config
    if len(checkpoint.nets) != config.n_stages:
        raise ValueError(
            f"checkpoint holds {len(checkpoint.nets)} networks, config says {config.n_stages}"
        )
    x = np.zeros((geom.image_size, geom.image_size), dtype=np.float64)
    intermediates = []
    for s, net in enumerate(checkpoint.nets, start=1):
        x = sirt_run(x, p, geom, config.sirt_iters_per_block)
        intermediates.append((f"sirt_{s:02d}", x))
        x = apply_regularization(x, net)
        intermediates.append((f"dnn_{s:02d}", x))
    if config.final_sirt:
        x = sirt_run(x, p, geom, config.sirt_iters_per_block)
        intermediates.append(("sirt_final", x))
    return x, intermediates


def save_pipeline(checkpoint: PipelineCheckpoint, directory) -> None:
    """Write config.json, model_XX.msd files and losses.csv to a directory."""
    os.makedirs(directory, exist_ok=True)
    doc = {
        "pipeline": checkpoint.config.to_dict(),
        "geometry": checkpoint.geom.to_dict(),
    }
    with open(os.path.join(directory, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    for i, net in enumerate(checkpoint.nets, start=1):
        save_checkpoint(
            net,
            os.path.join(directory, f"model_{i:02d}.msd"),
            seed=checkpoint.config.seed,
            adam={
                "lr": checkpoint.config.lr,
                "beta1": checkpoint.config.beta1,
                "beta2": checkpoint.config.beta2,
                "eps": checkpoint.config.eps,
            },
            metadata={"stage": i},
        )
    with open(os.path.join(directory, "losses.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "epoch", "train_loss", "val_loss"])
        for row in checkpoint.losses:
            writer.writerow(row)


def load_pipeline(directory) -> PipelineCheckpoint:
    """Read a checkpoint directory written by save_pipeline."""
    with open(os.path.join(directory, "config.json"), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    config = PipelineConfig.from_dict(doc["pipeline"])
    geom = ProjectionGeometry.from_dict(doc["geometry"])
    model_files = sorted(
        f for f in os.listdir(directory) if re.fullmatch(r"model_\d+\.msd", f)
    )
    if len(model_files) != config.n_stages:
        raise ValueError(
            f"{directory}: found {len(model_files)} model files, config says {config.n_stages}"
        )
    nets = []
    for name in model_files:
        net, _ = load_checkpoint(os.path.join(directory, name))
        if net.depth != config.depth or net.dilation_period != config.dilation_period:
            raise ValueError(f"{name}: architecture disagrees with config.json")
        nets.append(net)
    losses = []
    losses_path = os.path.join(directory, "losses.csv")
    if os.path.exists(losses_path):
        with open(losses_path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["stage", "epoch", "train_loss", "val_loss"]:
                raise ValueError(f"{losses_path}: unexpected columns {header}")
            for row in reader:
                losses.append((int(row[0]), int(row[1]), float(row[2]), float(row[3])))
    return PipelineCheckpoint(config=config, geom=geom, nets=nets, losses=losses)
