"""Metric definitions, the SSIM oracle, and report plumbing."""

import math

import numpy as np
import pytest

from sirtnet import ProjectionGeometry, forward_project
from sirtnet.metrics import (
    MetricReport,
    MetricSample,
    aggregate_report,
    image_metrics,
    mse,
    psnr,
    read_report_csv,
    report_csv,
    report_text,
    sinogram_fidelity,
    ssim,
)

from oracles import scalar_ssim


class TestMse:
    def test_identical_is_zero(self, rng):
        a = rng.random((16, 16))
        assert mse(a, a) == 0.0

    def test_constant_offset(self):
        a = np.zeros((8, 8))
        b = np.full((8, 8), 0.1)
        assert mse(a, b) == pytest.approx(0.01, rel=1e-15)

    def test_symmetric(self, rng):
        a = rng.random((12, 12))
        b = rng.random((12, 12))
        assert mse(a, b) == mse(b, a)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            mse(np.zeros((4, 4)), np.zeros((4, 5)))

    def test_non_finite_rejected(self):
        a = np.zeros((4, 4))
        b = a.copy()
        b[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            mse(a, b)


class TestPsnr:
    def test_identical_is_infinite(self, rng):
        a = rng.random((16, 16))
        assert psnr(a, a) == math.inf

    def test_constant_offset_twenty_db(self):
        # mse 0.01 against unit range: 10 log10(1 / 0.01) = 20
        a = np.zeros((8, 8))
        b = np.full((8, 8), 0.1)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-12)

    def test_duality_with_mse_is_exact(self, rng):
        a = rng.random((16, 16))
        b = rng.random((16, 16))
        p = psnr(a, b, data_range=1.0)
        assert p == 10.0 * math.log10(1.0 / mse(a, b))

    def test_larger_range_larger_psnr(self, rng):
        a = rng.random((16, 16))
        b = rng.random((16, 16))
        assert psnr(a, b, data_range=2.0) > psnr(a, b, data_range=1.0)

    def test_range_shift_is_twenty_log_ratio(self, rng):
        a = rng.random((16, 16))
        b = rng.random((16, 16))
        gap = psnr(a, b, data_range=10.0) - psnr(a, b, data_range=1.0)
        assert gap == pytest.approx(20.0, abs=1e-10)

    def test_nonpositive_range_rejected(self):
        with pytest.raises(ValueError, match="data_range"):
            psnr(np.zeros((4, 4)), np.ones((4, 4)), data_range=0.0)


class TestSsim:
    def test_identical_is_one_tight(self, rng):
        a = rng.random((32, 32))
        assert abs(ssim(a, a) - 1.0) <= 1e-12

    def test_matches_scalar_oracle(self, rng):
        a = rng.random((16, 16))
        b = np.clip(a + 0.05 * rng.standard_normal((16, 16)), 0.0, 1.0)
        fast = ssim(a, b)
        slow = scalar_ssim(a, b)
        assert fast == pytest.approx(slow, rel=1e-12)

    def test_matches_scalar_oracle_rectangular(self, rng):
        a = rng.random((12, 20))
        b = rng.random((12, 20))
        assert ssim(a, b) == pytest.approx(scalar_ssim(a, b), rel=1e-12)

    def test_never_exceeds_one(self, rng):
        a = rng.random((16, 16))
        b = rng.random((16, 16))
        assert ssim(a, b) <= 1.0 + 1e-12

    def test_degrades_with_noise_level(self, rng):
        a = rng.random((32, 32))
        noise = rng.standard_normal((32, 32))
        light = np.clip(a + 0.02 * noise, 0.0, 1.0)
        heavy = np.clip(a + 0.2 * noise, 0.0, 1.0)
        assert ssim(a, heavy) < ssim(a, light) < 1.0

    def test_small_images_need_smaller_window(self, rng):
        a = rng.random((8, 8))
        with pytest.raises(ValueError, match="win_size"):
            ssim(a, a)
        assert abs(ssim(a, a, win_size=5) - 1.0) <= 1e-12

    def test_even_window_rejected(self, rng):
        a = rng.random((16, 16))
        with pytest.raises(ValueError, match="odd"):
            ssim(a, a, win_size=10)

    def test_window_size_five_matches_oracle(self, rng):
        a = rng.random((9, 9))
        b = rng.random((9, 9))
        assert ssim(a, b, win_size=5) == pytest.approx(
            scalar_ssim(a, b, win_size=5), rel=1e-12
        )


@pytest.fixture(scope="module")
def fidelity_geom():
    return ProjectionGeometry(n_angles=12, image_size=16, n_detectors=23)


class TestSinogramFidelity:

    def test_perfect_reconstruction(self, fidelity_geom, rng):
        geom = fidelity_geom
        x = rng.random((16, 16))
        p = forward_project(x, geom)
        sample = sinogram_fidelity(x, p, geom, method="oracle", sample_id=3)
        assert sample.space == "sinogram"
        assert sample.method == "oracle"
        assert sample.sample_id == 3
        assert sample.psnr_db == math.inf
        assert sample.mse == 0.0
        assert abs(sample.ssim - 1.0) <= 1e-12

    def test_data_range_is_measurement_spread(self, fidelity_geom, rng):
        geom = fidelity_geom
        x = rng.random((16, 16))
        p = forward_project(x, geom) + 0.1 * rng.standard_normal((12, 23))
        sample = sinogram_fidelity(x, p, geom)
        spread = float(p.max() - p.min())
        resino = forward_project(x, geom)
        assert sample.psnr_db == pytest.approx(psnr(resino, p, spread), abs=1e-12)
        assert sample.mse == pytest.approx(mse(resino, p), rel=1e-15)

    def test_shape_validation(self, fidelity_geom):
        geom = fidelity_geom
        with pytest.raises(ValueError):
            sinogram_fidelity(np.zeros((16, 16)), np.zeros((5, 5)), geom)


class TestReports:
    def _samples(self):
        rows = []
        for i, (p, m, s) in enumerate([(20.0, 0.01, 0.8), (22.0, 0.006, 0.85), (24.0, 0.004, 0.9)]):
            rows.append(MetricSample("sirt", "image", i, p, m, s))
        rows.append(MetricSample("fbp", "image", 0, 15.0, 0.03, 0.6))
        return rows

    def test_population_convention(self):
        rep = MetricReport.from_samples(
            [MetricSample("m", "image", i, float(v), float(v), 1.0) for i, v in enumerate([1, 2, 3])]
        )
        agg = rep.aggregates["psnr_db"]
        assert agg["mean"] == pytest.approx(2.0)
        assert agg["std"] == pytest.approx(math.sqrt(2.0 / 3.0), rel=1e-12)

    def test_mse_gets_variance_column(self):
        rep = MetricReport.from_samples(self._samples()[:3])
        assert "var" in rep.aggregates["mse"]
        assert "var" not in rep.aggregates["psnr_db"]
        assert rep.aggregates["mse"]["var"] == pytest.approx(
            rep.aggregates["mse"]["std"] ** 2, rel=1e-12
        )

    def test_aggregate_groups_by_method(self):
        reports = aggregate_report(self._samples())
        assert [(r.method, r.space) for r in reports] == [("fbp", "image"), ("sirt", "image")]
        assert len(reports[1].samples) == 3

    def test_mixed_methods_in_one_report_rejected(self):
        with pytest.raises(ValueError, match="mixed"):
            MetricReport.from_samples(self._samples())

    def test_empty_aggregate_rejected(self):
        with pytest.raises(ValueError):
            aggregate_report([])

    def test_csv_round_trip_exact(self, rng):
        samples = [
            MetricSample("sirt+dnn", "sinogram", i, float(rng.random()), float(rng.random()), float(rng.random()))
            for i in range(5)
        ]
        text = report_csv(samples)
        assert text.splitlines()[0] == "method,space,sample_id,psnr_db,mse,ssim"
        back = read_report_csv(text)
        assert back == samples

    def test_csv_bad_header_rejected(self):
        with pytest.raises(ValueError, match="columns"):
            read_report_csv("a,b,c\n1,2,3\n")

    def test_text_table_lists_methods(self):
        table = report_text(aggregate_report(self._samples()))
        assert "sirt" in table and "fbp" in table
        assert "σ²" in table
        lines = table.splitlines()
        assert len(lines) == 4  # header, rule, two method rows

    def test_image_metrics_sample(self, rng):
        a = rng.random((16, 16))
        sample = image_metrics(a, a, method="sirt", sample_id=7)
        assert sample.space == "image"
        assert sample.psnr_db == math.inf
        assert abs(sample.ssim - 1.0) <= 1e-12
