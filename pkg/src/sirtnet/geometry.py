"""Parallel-beam acquisition geometry and a matrix-free Joseph projector.

The image is an n-by-n grid of unit pixels centred on the origin: pixel (i, j)
has its centre at y = i - (n-1)/2, x = j - (n-1)/2, with row index increasing
along +y.  A ray at angle theta with detector offset t is the line
x*cos(theta) + y*sin(theta) = t.  Angles live in [0, pi) on an equidistant,
endpoint-exclusive grid so no view is duplicated.

Projection uses Joseph's method: step along the axis most aligned with the
ray, linearly interpolate the two pixels straddling the crossing point in each
row (or column), and scale by the step length 1/|cos| (or 1/|sin|).
Backprojection scatters with the same weight tables, so the pair is an exact
adjoint up to floating-point accumulation order.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from functools import lru_cache

import numpy as np

from .validation import check_image_array, check_sinogram_array, output_dtype

__all__ = [
    "ProjectionGeometry",
    "DetectorCoverageWarning",
    "forward_project",
    "back_project",
    "inverse_row_sums",
    "inverse_col_sums",
]

# Column sums (and row sums) below this are treated as zero rather than
# inverted, so rays and pixels the system never touches stay silent.
SUM_EPS = 1e-8


class DetectorCoverageWarning(UserWarning):
    """The detector array is shorter than the image diagonal, so some views truncate."""


@dataclasses.dataclass(frozen=True)
class ProjectionGeometry:
    """Immutable description of a parallel-beam scan.

    Parameters
    ----------
    n_angles : number of projection directions.
    n_detectors : detector count per view; defaults to ``image_size``.
    image_size : side length n of the square reconstruction grid.
    detector_spacing : centre-to-centre detector pitch in pixel units.
    angles : optional explicit angles in radians, strictly increasing within
        [0, pi).  When omitted, ``k * pi / n_angles`` for k = 0..n_angles-1.
    """

    n_angles: int
    image_size: int
    n_detectors: int | None = None
    detector_spacing: float = 1.0
    angles: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_angles < 1:
            raise ValueError(f"n_angles must be positive, got {self.n_angles}")
        if self.image_size < 1:
            raise ValueError(f"image_size must be positive, got {self.image_size}")
        if self.n_detectors is None:
            object.__setattr__(self, "n_detectors", self.image_size)
        if self.n_detectors < 1:
            raise ValueError(f"n_detectors must be positive, got {self.n_detectors}")
        if self.detector_spacing <= 0:
            raise ValueError(f"detector_spacing must be positive, got {self.detector_spacing}")
        if self.angles is None:
            object.__setattr__(
                self,
                "angles",
                tuple(k * math.pi / self.n_angles for k in range(self.n_angles)),
            )
        else:
            object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
            if len(self.angles) != self.n_angles:
                raise ValueError(
                    f"got {len(self.angles)} angles for n_angles={self.n_angles}"
                )
            for a in self.angles:
                if not 0.0 <= a < math.pi:
                    raise ValueError(f"angles must lie in [0, pi), got {a}")
            if any(b <= a for a, b in zip(self.angles, self.angles[1:])):
                raise ValueError("angles must be strictly increasing")
        if self.n_detectors * self.detector_spacing < self.image_size * math.sqrt(2.0):
            warnings.warn(
                f"detector span {self.n_detectors * self.detector_spacing:.1f} is shorter "
                f"than the image diagonal {self.image_size * math.sqrt(2.0):.1f}; "
                "oblique views will truncate",
                DetectorCoverageWarning,
                stacklevel=2,
            )

    @property
    def n_rays(self) -> int:
        """Total number of measured line integrals, n_angles * n_detectors."""
        return self.n_angles * self.n_detectors

    @property
    def detector_offsets(self) -> np.ndarray:
        """Signed detector-centre coordinates, symmetric about zero."""
        k = np.arange(self.n_detectors, dtype=np.float64)
        return (k - (self.n_detectors - 1) / 2.0) * self.detector_spacing

    def has_default_angles(self) -> bool:
        default = tuple(k * math.pi / self.n_angles for k in range(self.n_angles))
        return self.angles == default

    def to_dict(self) -> dict:
        doc = {
            "n_angles": self.n_angles,
            "n_detectors": self.n_detectors,
            "image_size": self.image_size,
            "detector_spacing": self.detector_spacing,
        }
        if not self.has_default_angles():
            doc["angles"] = list(self.angles)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ProjectionGeometry":
        known = {"n_angles", "n_detectors", "image_size", "detector_spacing", "angles"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown geometry keys: {sorted(unknown)}")
        for key in ("n_angles", "image_size"):
            if key not in doc:
                raise ValueError(f"geometry document is missing {key!r}")
        return cls(
            n_angles=int(doc["n_angles"]),
            image_size=int(doc["image_size"]),
            n_detectors=int(doc["n_detectors"]) if "n_detectors" in doc else None,
            detector_spacing=float(doc.get("detector_spacing", 1.0)),
            angles=tuple(doc["angles"]) if "angles" in doc else None,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ProjectionGeometry":
        return cls.from_dict(json.loads(text))


class _AngleTable:
    """Precomputed interpolation taps for one view."""

    __slots__ = ("drive_rows", "idx_lo", "idx_hi", "w_lo", "w_hi")

    def __init__(self, drive_rows, idx_lo, idx_hi, w_lo, w_hi):
        self.drive_rows = drive_rows
        self.idx_lo = idx_lo
        self.idx_hi = idx_hi
        self.w_lo = w_lo
        self.w_hi = w_hi


class _JosephProjector:
    """Weight tables for every view of one geometry, shared by W and W^T."""

    def __init__(self, geom: ProjectionGeometry):
        self.geom = geom
        n = geom.image_size
        offsets = geom.detector_offsets
        steps = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
        self.tables = []
        for theta in geom.angles:
            c, s = math.cos(theta), math.sin(theta)
            if abs(c) >= abs(s):
                # Step over rows (y); the ray crosses row y at x = (t - y s)/c.
                drive_rows, major, minor = True, c, s
            else:
                # Step over columns (x); cross column x at y = (t - x c)/s.
                drive_rows, major, minor = False, s, c
            pos = (offsets[None, :] - steps[:, None] * minor) / major + (n - 1) / 2.0
            j0 = np.floor(pos).astype(np.int64)
            frac = pos - j0
            # Taps with j0 in [-1, n-1] touch the grid; everything else is off it.
            inside = (j0 >= -1) & (j0 <= n - 1)
            scale = 1.0 / abs(major)
            w_lo = np.where(inside, (1.0 - frac) * scale, 0.0)
            w_hi = np.where(inside, frac * scale, 0.0)
            # Indices into an (n, n+2) zero-padded buffer; the pad columns
            # absorb the taps that fall one pixel off either edge.
            jp = np.clip(j0 + 1, 0, n)
            rows = np.arange(n, dtype=np.int64)[:, None]
            idx_lo = (rows * (n + 2) + jp).ravel()
            idx_hi = idx_lo + 1
            self.tables.append(_AngleTable(drive_rows, idx_lo, idx_hi, w_lo, w_hi))

    def forward(self, image: np.ndarray) -> np.ndarray:
        geom = self.geom
        n = geom.image_size
        img = np.asarray(image, dtype=np.float64)
        pad = np.zeros((n, n + 2), dtype=np.float64)
        pad_t = np.zeros((n, n + 2), dtype=np.float64)
        pad[:, 1 : n + 1] = img
        pad_t[:, 1 : n + 1] = img.T
        flat, flat_t = pad.ravel(), pad_t.ravel()
        sino = np.empty((geom.n_angles, geom.n_detectors), dtype=np.float64)
        shape = (n, geom.n_detectors)
        for a, tab in enumerate(self.tables):
            src = flat if tab.drive_rows else flat_t
            vals = src.take(tab.idx_lo).reshape(shape) * tab.w_lo
            vals += src.take(tab.idx_hi).reshape(shape) * tab.w_hi
            sino[a] = vals.sum(axis=0)
        return sino

    def back(self, sino: np.ndarray) -> np.ndarray:
        geom = self.geom
        n = geom.image_size
        p = np.asarray(sino, dtype=np.float64)
        acc = np.zeros((n, n), dtype=np.float64)
        acc_t = np.zeros((n, n), dtype=np.float64)
        size = n * (n + 2)
        for a, tab in enumerate(self.tables):
            contrib_lo = (tab.w_lo * p[a]).ravel()
            contrib_hi = (tab.w_hi * p[a]).ravel()
            spread = np.bincount(tab.idx_lo, weights=contrib_lo, minlength=size)
            spread += np.bincount(tab.idx_hi, weights=contrib_hi, minlength=size)
            core = spread.reshape(n, n + 2)[:, 1 : n + 1]
            if tab.drive_rows:
                acc += core
            else:
                acc_t += core
        return acc + acc_t.T


@lru_cache(maxsize=32)
def _projector(geom: ProjectionGeometry) -> _JosephProjector:
    return _JosephProjector(geom)


def forward_project(image, geom: ProjectionGeometry) -> np.ndarray:
    """Apply W: integrate a square image along every ray of the geometry.

    Accumulates in float64; the result matches the input's storage dtype
    (float64 stays float64, anything else comes back float32).
    """
    arr = check_image_array(image, geom)
    sino = _projector(geom).forward(arr)
    return sino.astype(output_dtype(arr), copy=False)


def back_project(sino, geom: ProjectionGeometry) -> np.ndarray:
    """Apply W^T: smear a sinogram back over the image grid.

    Uses the same interpolation tables as :func:`forward_project`, so the two
    satisfy the adjoint identity <Wx, y> = <x, W^T y>.
    """
    arr = check_sinogram_array(sino, geom)
    img = _projector(geom).back(arr)
    return img.astype(output_dtype(arr), copy=False)


def inverse_row_sums(geom: ProjectionGeometry) -> np.ndarray:
    """1 / (row sums of W) as a flat length-n_rays float64 array, angle-major.

    Row i of W sums to the projection of an all-ones image along ray i.  Rays
    that miss the grid entirely get weight 0 instead of a division blow-up.
    """
    ones = np.ones((geom.image_size, geom.image_size), dtype=np.float64)
    sums = _projector(geom).forward(ones).ravel()
    return np.where(sums > SUM_EPS, 1.0 / np.maximum(sums, SUM_EPS), 0.0)


def inverse_col_sums(geom: ProjectionGeometry) -> np.ndarray:
    """1 / (column sums of W) as an (n, n) float64 array.

    Column j of W sums to the backprojection of an all-ones sinogram at pixel
    j.  Pixels no ray touches get weight 0.
    """
    ones = np.ones((geom.n_angles, geom.n_detectors), dtype=np.float64)
    sums = _projector(geom).back(ones)
    return np.where(sums > SUM_EPS, 1.0 / np.maximum(sums, SUM_EPS), 0.0)
