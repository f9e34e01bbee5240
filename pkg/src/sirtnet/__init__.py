"""sirtnet: low-dose CT reconstruction with SIRT, FBP, CGLS and a trainable
dense dilated-convolution regularizer.

The package is organised around plain numpy arrays: images are square float
arrays, sinograms are angle-major (n_angles, n_detectors) arrays.  Geometry
and solver state live in small dataclasses; the estimator layer wraps the
solvers in a scikit-learn style fit/transform API.
"""

from .geometry import (
    DetectorCoverageWarning,
    ProjectionGeometry,
    back_project,
    forward_project,
    inverse_col_sums,
    inverse_row_sums,
)

__version__ = "0.1.0"

__all__ = [
    "ProjectionGeometry",
    "DetectorCoverageWarning",
    "forward_project",
    "back_project",
    "inverse_row_sums",
    "inverse_col_sums",
    "__version__",
]
