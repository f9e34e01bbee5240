"""Classical reconstruction solvers: SIRT, FBP and CGLS.

All three run their inner loops in float64 regardless of the input storage
dtype; results follow the package-wide dtype policy (float64 in, float64 out,
otherwise float32).  Stopping is iteration-count only.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .geometry import ProjectionGeometry, _projector
from .validation import check_image_array, check_sinogram_array, output_dtype

__all__ = [
    "SirtState",
    "sirt_step",
    "sirt_run",
    "weighted_residual",
    "fbp",
    "ramp_filter",
    "cgls",
]

# Direction vectors shorter than this mean CGLS has stagnated.
CGLS_STAGNATION_EPS = 1e-12


@dataclasses.dataclass(frozen=True)
class SirtState:
    """One SIRT iterate plus everything needed to advance it.

    The normalization weights (inverse row and column sums of the projection
    matrix) are computed once per geometry and shared across steps.
    """

    x: np.ndarray
    k: int
    geom: ProjectionGeometry
    target: np.ndarray
    inv_rows: np.ndarray
    inv_cols: np.ndarray

    @classmethod
    def initialize(cls, x0, p, geom: ProjectionGeometry) -> "SirtState":
        p = check_sinogram_array(p, geom).astype(np.float64)
        if x0 is None:
            x = np.zeros((geom.image_size, geom.image_size), dtype=np.float64)
        else:
            x = check_image_array(x0, geom).astype(np.float64)
        proj = _projector(geom)
        row_sums = proj.forward(np.ones((geom.image_size, geom.image_size)))
        col_sums = proj.back(np.ones((geom.n_angles, geom.n_detectors)))
        inv_rows = np.where(row_sums > 1e-8, 1.0 / np.maximum(row_sums, 1e-8), 0.0)
        inv_cols = np.where(col_sums > 1e-8, 1.0 / np.maximum(col_sums, 1e-8), 0.0)
        return cls(x=x, k=0, geom=geom, target=p, inv_rows=inv_rows, inv_cols=inv_cols)


def sirt_step(state: SirtState) -> SirtState:
    """Advance one SIRT iteration: x + C * W^T(R * (p - W x))."""
    proj = _projector(state.geom)
    residual = state.target - proj.forward(state.x)
    update = state.inv_cols * proj.back(state.inv_rows * residual)
    return dataclasses.replace(state, x=state.x + update, k=state.k + 1)


def sirt_run(x0, p, geom: ProjectionGeometry, n_iters: int) -> np.ndarray:
    """Run ``n_iters`` SIRT steps from ``x0`` (zeros when None)."""
    if n_iters < 0:
        raise ValueError(f"n_iters must be nonnegative, got {n_iters}")
    p_arr = check_sinogram_array(p, geom)
    state = SirtState.initialize(x0, p_arr, geom)
    for _ in range(n_iters):
        state = sirt_step(state)
    dtype = output_dtype(np.asarray(x0) if x0 is not None else p_arr)
    return state.x.astype(dtype, copy=False)


def weighted_residual(x, p, geom: ProjectionGeometry) -> float:
    """The weighted data misfit (Wx - p)^T R (Wx - p)."""
    x = check_image_array(x, geom).astype(np.float64)
    p = check_sinogram_array(p, geom).astype(np.float64)
    proj = _projector(geom)
    r = proj.forward(x) - p
    row_sums = proj.forward(np.ones((geom.image_size, geom.image_size)))
    inv_rows = np.where(row_sums > 1e-8, 1.0 / np.maximum(row_sums, 1e-8), 0.0)
    return float(np.sum(inv_rows * r * r))


def ramp_filter(sino, geom: ProjectionGeometry) -> np.ndarray:
    """Ram-Lak filter each view along the detector axis.

    Zero-pads to the next power of two at least twice the detector count and
    multiplies in the frequency domain.  The frequency response is the DFT of
    the exact discrete ramp kernel (value 1/4 at lag 0, -1/(pi n)^2 at odd
    lags), which keeps the DC term honest instead of forcing it to zero.
    """
    p = check_sinogram_array(sino, geom).astype(np.float64)
    n_det = geom.n_detectors
    size = max(64, 2 ** math.ceil(math.log2(2 * n_det)))
    lags = np.concatenate(
        [np.arange(size // 2 + 1), np.arange(size // 2 - 1, 0, -1)]
    )
    kernel = np.zeros(size)
    kernel[0] = 0.25
    odd = lags % 2 == 1
    kernel[odd] = -1.0 / (math.pi * lags[odd]) ** 2
    response = 2.0 * np.real(np.fft.fft(kernel))[: size // 2 + 1]
    spectrum = np.fft.rfft(p, n=size, axis=1)
    filtered = np.fft.irfft(spectrum * response, n=size, axis=1)[:, :n_det]
    return filtered / geom.detector_spacing


def fbp(p, geom: ProjectionGeometry) -> np.ndarray:
    """Filtered backprojection: ramp filter, backproject, scale pi/(2 n_angles)."""
    p_arr = check_sinogram_array(p, geom)
    filtered = ramp_filter(p_arr, geom)
    recon = _projector(geom).back(filtered) * (math.pi / (2.0 * geom.n_angles))
    return recon.astype(output_dtype(np.asarray(p_arr)), copy=False)


def cgls(p, geom: ProjectionGeometry, n_iters: int) -> np.ndarray:
    """Conjugate gradient on the normal equations of min ||Wx - p||_2, from zero.

    Returns early if the search direction collapses below the stagnation
    threshold, which on consistent small systems happens well before the
    requested iteration count.
    """
    if n_iters < 1:
        raise ValueError(f"n_iters must be at least 1, got {n_iters}")
    p_arr = check_sinogram_array(p, geom)
    proj = _projector(geom)
    b = p_arr.astype(np.float64)
    x = np.zeros((geom.image_size, geom.image_size), dtype=np.float64)
    r = b.copy()
    s = proj.back(r)
    d = s.copy()
    gamma = float(np.vdot(s, s))
    for _ in range(n_iters):
        if math.sqrt(float(np.vdot(d, d))) < CGLS_STAGNATION_EPS:
            break
        q = proj.forward(d)
        qq = float(np.vdot(q, q))
        if qq == 0.0:
            break
        alpha = gamma / qq
        x += alpha * d
        r -= alpha * q
        s = proj.back(r)
        gamma_new = float(np.vdot(s, s))
        d = s + (gamma_new / gamma) * d
        gamma = gamma_new
    return x.astype(output_dtype(np.asarray(p_arr)), copy=False)
