"""Input validation helpers shared across the toolkit.

All public entry points funnel array inputs through these checks, so the
numerical code can assume well-shaped, finite data.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_image_array",
    "check_sinogram_array",
    "check_image_stack",
    "check_sinogram_stack",
    "output_dtype",
]


def output_dtype(arr: np.ndarray) -> np.dtype:
    """Storage dtype policy: float64 inputs stay float64, everything else is float32."""
    return np.dtype(np.float64) if arr.dtype == np.float64 else np.dtype(np.float32)


def check_image_array(image, geom=None, *, name: str = "image") -> np.ndarray:
    """Validate a square image array; returns it as an ndarray.

    Raises ValueError on wrong rank, non-square shape, a mismatch with
    ``geom.image_size``, or non-finite entries.
    """
    arr = np.asarray(image)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square 2-D array, got shape {arr.shape}")
    if geom is not None and arr.shape[0] != geom.image_size:
        raise ValueError(
            f"{name} size {arr.shape[0]} does not match geometry image_size {geom.image_size}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_sinogram_array(sino, geom, *, name: str = "sinogram") -> np.ndarray:
    """Validate an angle-major sinogram array against a geometry."""
    arr = np.asarray(sino)
    expected = (geom.n_angles, geom.n_detectors)
    if arr.shape != expected:
        raise ValueError(f"{name} shape {arr.shape} does not match geometry {expected}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_image_stack(images, geom=None, *, name: str = "images") -> np.ndarray:
    """Validate a stack of square images shaped (n_samples, size, size)."""
    arr = np.asarray(images)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"{name} must be shaped (n_samples, size, size), got {arr.shape}")
    if geom is not None and arr.shape[1] != geom.image_size:
        raise ValueError(
            f"{name} size {arr.shape[1]} does not match geometry image_size {geom.image_size}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_sinogram_stack(sinos, geom, *, name: str = "sinograms") -> np.ndarray:
    """Validate a stack of sinograms shaped (n_samples, n_angles, n_detectors)."""
    arr = np.asarray(sinos)
    if arr.ndim == 2:
        arr = arr[None]
    expected = (geom.n_angles, geom.n_detectors)
    if arr.ndim != 3 or arr.shape[1:] != expected:
        raise ValueError(f"{name} must be shaped (n_samples, *{expected}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr
