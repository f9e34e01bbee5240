import numpy as np
import pytest

from sirtnet import ProjectionGeometry


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_geom():
    """8x8 grid, 10 views: small enough for dense-matrix oracles."""
    return ProjectionGeometry(n_angles=10, image_size=8)


@pytest.fixture
def adjoint_geom():
    """16x16 grid, 10 views: the adjoint-identity test size."""
    return ProjectionGeometry(n_angles=10, image_size=16)
