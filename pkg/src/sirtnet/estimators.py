"""Scikit-learn style wrappers around the reconstruction algorithms.

The analytic reconstructors (FBP, SIRT, CGLS) are stateless transformers:
``transform`` maps a stack of sinograms (n_samples, n_angles, n_detectors) to
a stack of images (n_samples, size, size).  SirtDnnReconstructor is a real
estimator: ``fit`` trains the interleaved pipeline on (sinograms, images)
pairs and ``predict`` reconstructs new sinograms with it.  All of them follow
the get_params/set_params contract, so they compose with sklearn tooling.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .geometry import ProjectionGeometry
from .pipeline import PipelineCheckpoint, PipelineConfig, reconstruct, train_pipeline
from .solvers import cgls, fbp, sirt_run
from .validation import check_image_stack, check_sinogram_stack

__all__ = [
    "FbpReconstructor",
    "SirtReconstructor",
    "CglsReconstructor",
    "SirtDnnReconstructor",
]


class _StatelessReconstructor(BaseEstimator, TransformerMixin):
    """Shared shape handling for the non-learned reconstructors."""

    def fit(self, X, y=None):
        check_sinogram_stack(X, self.geometry, name="X")
        return self

    def transform(self, X):
        sinos = check_sinogram_stack(X, self.geometry, name="X")
        n = self.geometry.image_size
        out = np.empty((sinos.shape[0], n, n), dtype=np.float64)
        for i in range(sinos.shape[0]):
            out[i] = self._reconstruct_one(sinos[i])
        return out

    def _reconstruct_one(self, sino):
        raise NotImplementedError


class FbpReconstructor(_StatelessReconstructor):
    """Filtered back projection with the standard ramp filter."""

    def __init__(self, geometry: ProjectionGeometry):
        self.geometry = geometry

    def _reconstruct_one(self, sino):
        return fbp(sino, self.geometry)


class SirtReconstructor(_StatelessReconstructor):
    """Plain SIRT from a zero start for a fixed iteration count."""

    def __init__(self, geometry: ProjectionGeometry, n_iters: int = 200):
        self.geometry = geometry
        self.n_iters = n_iters

    def _reconstruct_one(self, sino):
        n = self.geometry.image_size
        return sirt_run(np.zeros((n, n)), sino, self.geometry, self.n_iters)


class CglsReconstructor(_StatelessReconstructor):
    """Conjugate gradient least squares from a zero start."""

    def __init__(self, geometry: ProjectionGeometry, n_iters: int = 20):
        self.geometry = geometry
        self.n_iters = n_iters

    def _reconstruct_one(self, sino):
        return cgls(sino, self.geometry, self.n_iters)


class SirtDnnReconstructor(BaseEstimator):
    """Learned interleaved reconstruction with the sklearn estimator API.

    ``fit(X, y)`` takes sinograms X of shape (n_samples, n_angles,
    n_detectors) and ground-truth images y of shape (n_samples, size, size),
    carves off a validation share, and trains the stage networks.  The
    trained ``checkpoint_`` then drives ``predict``.  Alternatively an
    existing checkpoint can be supplied to skip training.
    """

    def __init__(
        self,
        geometry: ProjectionGeometry,
        config: PipelineConfig | None = None,
        validation_fraction: float = 0.2,
        checkpoint: PipelineCheckpoint | None = None,
    ):
        self.geometry = geometry
        self.config = config
        self.validation_fraction = validation_fraction
        self.checkpoint = checkpoint

    def fit(self, X, y):
        if self.checkpoint is not None:
            if self.checkpoint.geom != self.geometry:
                raise ValueError("supplied checkpoint was trained on a different geometry")
            self.checkpoint_ = self.checkpoint
            return self
        config = self.config if self.config is not None else PipelineConfig()
        sinos = check_sinogram_stack(X, self.geometry, name="X")
        images = check_image_stack(y, self.geometry, name="y")
        if sinos.shape[0] != images.shape[0]:
            raise ValueError(
                f"X holds {sinos.shape[0]} sinograms but y holds {images.shape[0]} images"
            )
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        n = sinos.shape[0]
        if n < 2:
            raise ValueError("need at least 2 samples to carve off a validation set")
        n_val = min(max(int(round(n * self.validation_fraction)), 1), n - 1)
        order = np.random.default_rng(
            np.random.SeedSequence([int(config.seed), 2])
        ).permutation(n)
        val_idx = np.sort(order[:n_val])
        train_idx = np.sort(order[n_val:])
        self.checkpoint_ = train_pipeline(
            (images[train_idx], sinos[train_idx]),
            (images[val_idx], sinos[val_idx]),
            self.geometry,
            config,
        )
        return self

    def predict(self, X):
        if not hasattr(self, "checkpoint_"):
            raise RuntimeError("this reconstructor has not been fitted")
        sinos = check_sinogram_stack(X, self.geometry, name="X")
        n = self.geometry.image_size
        out = np.empty((sinos.shape[0], n, n), dtype=np.float64)
        for i in range(sinos.shape[0]):
            out[i], _ = reconstruct(sinos[i], self.geometry, self.checkpoint_)
        return out

    def transform(self, X):
        return self.predict(X)

    def fit_predict(self, X, y):
        return self.fit(X, y).predict(X)

    def baseline_iterations(self) -> int:
        """Total SIRT iterations an equal-budget plain SIRT run would use."""
        if not hasattr(self, "checkpoint_"):
            raise RuntimeError("this reconstructor has not been fitted")
        cfg = self.checkpoint_.config
        blocks = cfg.n_stages + (1 if cfg.final_sirt else 0)
        return blocks * cfg.sirt_iters_per_block
