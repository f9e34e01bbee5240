import json
import math

import numpy as np
import pytest

from sirtnet import (
    DetectorCoverageWarning,
    ProjectionGeometry,
    back_project,
    forward_project,
    inverse_col_sums,
    inverse_row_sums,
)

from oracles import (
    dense_joseph_matrix,
    disk_profile,
    square_chord_length,
    supersampled_disk,
)


class TestProjectionGeometry:
    def test_default_angles_are_equidistant_endpoint_exclusive(self):
        geom = ProjectionGeometry(n_angles=4, image_size=8)
        assert geom.angles == (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)

    def test_twenty_views_span_half_turn(self):
        geom = ProjectionGeometry(n_angles=20, image_size=64)
        assert len(geom.angles) == 20
        steps = np.diff(geom.angles)
        assert np.allclose(steps, math.pi / 20)
        assert geom.angles[0] == 0.0
        assert geom.angles[-1] < math.pi

    def test_n_detectors_defaults_to_image_size(self):
        geom = ProjectionGeometry(n_angles=5, image_size=32)
        assert geom.n_detectors == 32
        assert geom.n_rays == 5 * 32

    def test_detector_offsets_symmetric(self):
        geom = ProjectionGeometry(n_angles=1, image_size=4, n_detectors=4)
        assert np.allclose(geom.detector_offsets, [-1.5, -0.5, 0.5, 1.5])
        geom2 = ProjectionGeometry(n_angles=1, image_size=4, n_detectors=3, detector_spacing=2.0)
        assert np.allclose(geom2.detector_offsets, [-2.0, 0.0, 2.0])

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_angles=0, image_size=8),
            dict(n_angles=4, image_size=0),
            dict(n_angles=4, image_size=8, n_detectors=0),
            dict(n_angles=4, image_size=8, detector_spacing=0.0),
            dict(n_angles=4, image_size=8, detector_spacing=-1.0),
            dict(n_angles=2, image_size=8, angles=(0.0,)),
            dict(n_angles=2, image_size=8, angles=(0.3, 0.2)),
            dict(n_angles=2, image_size=8, angles=(0.0, math.pi)),
            dict(n_angles=2, image_size=8, angles=(-0.1, 0.5)),
        ],
    )
    def test_invalid_parameters_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ProjectionGeometry(**kwargs)

    def test_short_detector_warns(self):
        with pytest.warns(DetectorCoverageWarning):
            ProjectionGeometry(n_angles=4, image_size=8)

    def test_wide_detector_does_not_warn(self, recwarn):
        ProjectionGeometry(n_angles=4, image_size=8, n_detectors=12)
        assert not any(isinstance(w.message, DetectorCoverageWarning) for w in recwarn.list)

    def test_json_round_trip_default_angles(self):
        geom = ProjectionGeometry(n_angles=20, image_size=128, n_detectors=128)
        doc = json.loads(geom.to_json())
        assert doc == {
            "n_angles": 20,
            "n_detectors": 128,
            "image_size": 128,
            "detector_spacing": 1.0,
        }
        assert ProjectionGeometry.from_json(geom.to_json()) == geom

    def test_json_round_trip_custom_angles(self):
        geom = ProjectionGeometry(
            n_angles=3, image_size=16, n_detectors=24, angles=(0.1, 0.7, 2.0)
        )
        doc = geom.to_dict()
        assert doc["angles"] == [0.1, 0.7, 2.0]
        assert ProjectionGeometry.from_dict(doc) == geom

    def test_json_rejects_unknown_and_missing_keys(self):
        with pytest.raises(ValueError, match="unknown"):
            ProjectionGeometry.from_dict(
                {"n_angles": 4, "n_detectors": 8, "image_size": 8, "pitch": 1.0}
            )
        with pytest.raises(ValueError, match="missing"):
            ProjectionGeometry.from_dict({"n_angles": 4, "n_detectors": 8})

    def test_from_dict_defaults_detector_count(self):
        geom = ProjectionGeometry.from_dict({"n_angles": 4, "image_size": 8})
        assert geom == ProjectionGeometry(n_angles=4, image_size=8)
        assert geom.n_detectors == 8

    def test_geometry_is_hashable(self):
        a = ProjectionGeometry(n_angles=4, image_size=8)
        b = ProjectionGeometry(n_angles=4, image_size=8)
        assert a == b
        assert hash(a) == hash(b)


class TestForwardProject:
    def test_zero_image_gives_zero_sinogram(self, small_geom):
        sino = forward_project(np.zeros((8, 8)), small_geom)
        assert sino.shape == (10, 8)
        assert np.all(sino == 0.0)

    def test_matches_dense_oracle(self, small_geom, rng):
        dense = dense_joseph_matrix(small_geom)
        x = rng.standard_normal((8, 8))
        expected = (dense @ x.ravel()).reshape(10, 8)
        got = forward_project(x, small_geom)
        assert np.max(np.abs(got - expected)) < 1e-4

    def test_matches_dense_oracle_16x16(self, adjoint_geom, rng):
        dense = dense_joseph_matrix(adjoint_geom)
        x = rng.standard_normal((16, 16))
        expected = (dense @ x.ravel()).reshape(10, 16)
        got = forward_project(x, adjoint_geom)
        assert np.max(np.abs(got - expected)) < 1e-4

    def test_linearity(self, small_geom, rng):
        x1 = rng.standard_normal((8, 8))
        x2 = rng.standard_normal((8, 8))
        combo = forward_project(2.5 * x1 - 0.75 * x2, small_geom)
        parts = 2.5 * forward_project(x1, small_geom) - 0.75 * forward_project(x2, small_geom)
        assert np.allclose(combo, parts, atol=1e-10)

    @pytest.mark.parametrize("theta", [0.0, math.pi / 7, math.pi / 4, math.pi / 2, 2.2])
    def test_center_pixel_center_ray_equals_chord(self, theta):
        geom = ProjectionGeometry(n_angles=1, image_size=5, n_detectors=5, angles=(theta,))
        img = np.zeros((5, 5))
        img[2, 2] = 1.0
        profile = forward_project(img, geom)[0]
        chord = square_chord_length(theta, t=0.0, cx=0.0, cy=0.0)
        assert profile[2] == pytest.approx(chord, rel=1e-12)

    @pytest.mark.parametrize("theta", [0.0, 0.4, 1.0, math.pi / 2, 2.7])
    def test_center_pixel_total_mass_equals_center_chord(self, theta):
        # With unit detector pitch, only the detector aligned with the pixel
        # centre responds, so the whole row mass is that ray's chord length.
        geom = ProjectionGeometry(n_angles=1, image_size=5, n_detectors=9, angles=(theta,))
        img = np.zeros((5, 5))
        img[2, 2] = 1.0
        profile = forward_project(img, geom)[0]
        chord = square_chord_length(theta, t=0.0, cx=0.0, cy=0.0)
        assert profile.sum() == pytest.approx(chord, rel=1e-12)

    def test_disk_profile_matches_closed_form(self):
        n, radius = 64, 24.0
        geom = ProjectionGeometry(
            n_angles=5, image_size=n, angles=(0.0, 0.3, math.pi / 4, 1.2, math.pi / 2)
        )
        disk = supersampled_disk(n, radius)
        sino = forward_project(disk, geom)
        offsets = geom.detector_offsets
        interior = np.abs(offsets) <= 0.8 * radius
        expected = disk_profile(radius, offsets[interior])
        for profile in sino:
            rel = np.abs(profile[interior] - expected) / expected
            assert rel.max() < 0.05

    def test_rotation_consistency_on_disk(self):
        n, radius = 64, 24.0
        geom = ProjectionGeometry(n_angles=12, image_size=n)
        disk = supersampled_disk(n, radius)
        sino = forward_project(disk, geom)
        interior = np.abs(geom.detector_offsets) <= 0.8 * radius
        profiles = sino[:, interior]
        mean = profiles.mean(axis=0)
        spread = np.abs(profiles - mean) / mean
        assert spread.max() < 0.01

    def test_dimension_mismatch_rejected(self, small_geom):
        with pytest.raises(ValueError, match="does not match"):
            forward_project(np.zeros((9, 9)), small_geom)
        with pytest.raises(ValueError, match="square"):
            forward_project(np.zeros((8, 9)), small_geom)

    def test_non_finite_rejected(self, small_geom):
        bad = np.zeros((8, 8))
        bad[3, 3] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            forward_project(bad, small_geom)

    def test_dtype_policy(self, small_geom):
        x32 = np.zeros((8, 8), dtype=np.float32)
        x64 = np.zeros((8, 8), dtype=np.float64)
        assert forward_project(x32, small_geom).dtype == np.float32
        assert forward_project(x64, small_geom).dtype == np.float64


class TestBackProject:
    def test_zero_sinogram_gives_zero_image(self, small_geom):
        img = back_project(np.zeros((10, 8)), small_geom)
        assert img.shape == (8, 8)
        assert np.all(img == 0.0)

    def test_matches_dense_oracle_transpose(self, small_geom, rng):
        dense = dense_joseph_matrix(small_geom)
        y = rng.standard_normal((10, 8))
        expected = (dense.T @ y.ravel()).reshape(8, 8)
        got = back_project(y, small_geom)
        assert np.max(np.abs(got - expected)) < 1e-4

    def test_single_bin_matches_oracle_row(self, small_geom):
        dense = dense_joseph_matrix(small_geom)
        for ray in (0, 37, 79):
            sino = np.zeros((10, 8))
            sino[divmod(ray, 8)] = 1.0
            footprint = back_project(sino, small_geom)
            assert np.allclose(footprint.ravel(), dense[ray], atol=1e-10)

    def test_adjoint_identity_100_pairs(self, adjoint_geom, rng):
        geom = adjoint_geom
        for _ in range(100):
            x = rng.standard_normal((16, 16)).astype(np.float32)
            y = rng.standard_normal((10, 16)).astype(np.float32)
            lhs = float(np.vdot(forward_project(x, geom), y))
            rhs = float(np.vdot(x, back_project(y, geom)))
            bound = 1e-5 * np.linalg.norm(x) * np.linalg.norm(y)
            assert abs(lhs - rhs) <= bound

    def test_linearity(self, small_geom, rng):
        y1 = rng.standard_normal((10, 8))
        y2 = rng.standard_normal((10, 8))
        combo = back_project(-1.5 * y1 + 0.25 * y2, small_geom)
        parts = -1.5 * back_project(y1, small_geom) + 0.25 * back_project(y2, small_geom)
        assert np.allclose(combo, parts, atol=1e-10)

    def test_dimension_mismatch_rejected(self, small_geom):
        with pytest.raises(ValueError, match="does not match"):
            back_project(np.zeros((10, 9)), small_geom)

    def test_dtype_policy(self, small_geom):
        y32 = np.zeros((10, 8), dtype=np.float32)
        y64 = np.zeros((10, 8), dtype=np.float64)
        assert back_project(y32, small_geom).dtype == np.float32
        assert back_project(y64, small_geom).dtype == np.float64


class TestNormalizationWeights:
    def test_axis_aligned_rays_cross_four_pixels(self):
        geom = ProjectionGeometry(n_angles=1, image_size=4, angles=(0.0,))
        inv = inverse_row_sums(geom)
        assert inv.shape == (4,)
        assert np.allclose(inv, 0.25, atol=1e-12)

    def test_ray_missing_image_maps_to_zero(self):
        geom = ProjectionGeometry(n_angles=2, image_size=4, n_detectors=32)
        inv = inverse_row_sums(geom)
        assert np.all(np.isfinite(inv))
        assert inv[0] == 0.0 and inv[-1] == 0.0
        assert inv.max() > 0.0

    def test_row_sums_consistency(self, small_geom):
        inv = inverse_row_sums(small_geom)
        sums = forward_project(np.ones((8, 8), dtype=np.float64), small_geom).ravel()
        supported = inv > 0
        assert np.allclose(inv[supported] * sums[supported], 1.0, atol=1e-10)

    def test_row_sums_match_dense_oracle(self, small_geom):
        dense = dense_joseph_matrix(small_geom)
        row_sums = dense.sum(axis=1)
        expected = np.where(row_sums > 1e-8, 1.0 / np.maximum(row_sums, 1e-8), 0.0)
        assert np.allclose(inverse_row_sums(small_geom), expected, atol=1e-6)

    def test_col_sums_match_dense_oracle(self, small_geom):
        dense = dense_joseph_matrix(small_geom)
        col_sums = dense.sum(axis=0).reshape(8, 8)
        expected = np.where(col_sums > 1e-8, 1.0 / np.maximum(col_sums, 1e-8), 0.0)
        assert np.allclose(inverse_col_sums(small_geom), expected, atol=1e-6)

    def test_truncated_detector_corner_pixel_zero(self):
        # Angles chosen so no ray's interpolation footprint reaches (0, 0):
        # the anti-diagonal view that would graze it is deliberately absent.
        geom = ProjectionGeometry(
            n_angles=3, image_size=8, n_detectors=2, angles=(0.0, math.pi / 4, math.pi / 2)
        )
        inv = inverse_col_sums(geom)
        assert inv.shape == (8, 8)
        assert inv[0, 0] == 0.0
        assert inv[4, 4] > 0.0

    def test_col_sums_consistency(self, small_geom):
        inv = inverse_col_sums(small_geom)
        sums = back_project(np.ones((10, 8), dtype=np.float64), small_geom)
        supported = inv > 0
        assert np.allclose((inv * sums)[supported], 1.0, atol=1e-10)
