"""Image- and sinogram-space quality metrics and report generation.

PSNR, MSE and SSIM per sample, grouped into per-method reports with
population-convention (ddof=0) mean and standard deviation; MSE additionally
gets a variance column in the text table.  Sinogram fidelity reprojects a
reconstruction and scores it against the measured data, with the data range
taken from the measurement itself.
"""

from __future__ import annotations

import dataclasses
import io
import csv
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .geometry import ProjectionGeometry, forward_project
from .validation import check_image_array, check_sinogram_array

__all__ = [
    "MetricSample",
    "MetricReport",
    "mse",
    "psnr",
    "ssim",
    "image_metrics",
    "sinogram_fidelity",
    "aggregate_report",
    "report_csv",
    "read_report_csv",
    "report_text",
]

CSV_COLUMNS = ["method", "space", "sample_id", "psnr_db", "mse", "ssim"]


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("metric inputs must be finite")
    return a, b


def mse(a, b) -> float:
    """Mean squared difference."""
    a, b = _check_pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB: 10 log10(range^2 / mse).

    Identical inputs have zero error and return +inf.
    """
    if data_range <= 0:
        raise ValueError(f"data_range must be positive, got {data_range}")
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range**2 / err)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    k = np.arange(size, dtype=np.float64) - half
    w = np.exp(-(k**2) / (2.0 * sigma**2))
    window = np.outer(w, w)
    return window / window.sum()


def ssim(a, b, data_range: float = 1.0, win_size: int = 11, sigma: float = 1.5) -> float:
    """Mean structural similarity with a Gaussian window.

    Defaults follow the standard recipe: 11x11 window, sigma 1.5,
    C1=(0.01 L)^2, C2=(0.03 L)^2 with L = data_range.  Local statistics use
    valid-mode windows only, so both inputs must be at least win_size on each
    axis; pass a smaller odd win_size for tiny images.
    """
    a, b = _check_pair(a, b)
    if data_range <= 0:
        raise ValueError(f"data_range must be positive, got {data_range}")
    if win_size % 2 == 0 or win_size < 3:
        raise ValueError(f"win_size must be odd and >= 3, got {win_size}")
    if min(a.shape) < win_size:
        raise ValueError(
            f"inputs of shape {a.shape} are smaller than the {win_size}x{win_size} window; "
            "pass a smaller odd win_size"
        )
    window = _gaussian_window(win_size, sigma)
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    axes = ([2, 3], [0, 1])
    wins_a = sliding_window_view(a, (win_size, win_size))
    wins_b = sliding_window_view(b, (win_size, win_size))
    mu_a = np.tensordot(wins_a, window, axes=axes)
    mu_b = np.tensordot(wins_b, window, axes=axes)
    var_a = np.tensordot(wins_a**2, window, axes=axes) - mu_a**2
    var_b = np.tensordot(wins_b**2, window, axes=axes) - mu_b**2
    cov = np.tensordot(wins_a * wins_b, window, axes=axes) - mu_a * mu_b
    numerator = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    denominator = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(numerator / denominator))


@dataclasses.dataclass(frozen=True)
class MetricSample:
    """One (method, sample) measurement in one space."""

    method: str
    space: str
    sample_id: int
    psnr_db: float
    mse: float
    ssim: float


@dataclasses.dataclass(frozen=True)
class MetricReport:
    """Per-sample measurements for one method/space plus their aggregates.

    Aggregates use the population convention (ddof=0); MSE also carries its
    variance so both spread conventions are available.
    """

    method: str
    space: str
    samples: tuple
    aggregates: dict

    @classmethod
    def from_samples(cls, samples) -> "MetricReport":
        samples = tuple(samples)
        if not samples:
            raise ValueError("cannot aggregate an empty sample list")
        methods = {s.method for s in samples}
        spaces = {s.space for s in samples}
        if len(methods) != 1 or len(spaces) != 1:
            raise ValueError(f"mixed methods {methods} or spaces {spaces} in one report")
        aggregates = {}
        for metric in ("psnr_db", "mse", "ssim"):
            values = np.array([getattr(s, metric) for s in samples], dtype=np.float64)
            entry = {"mean": float(values.mean()), "std": float(values.std(ddof=0))}
            if metric == "mse":
                entry["var"] = float(values.var(ddof=0))
            aggregates[metric] = entry
        return cls(
            method=samples[0].method,
            space=samples[0].space,
            samples=samples,
            aggregates=aggregates,
        )


def image_metrics(recon, reference, *, method: str, sample_id: int,
                  data_range: float = 1.0) -> MetricSample:
    """Score one reconstruction against its reference in image space."""
    return MetricSample(
        method=method,
        space="image",
        sample_id=sample_id,
        psnr_db=psnr(recon, reference, data_range),
        mse=mse(recon, reference),
        ssim=ssim(recon, reference, data_range),
    )


def sinogram_fidelity(recon, p_measured, geom: ProjectionGeometry, *,
                      method: str = "", sample_id: int = 0,
                      win_size: int = 11) -> MetricSample:
    """Reproject a reconstruction and score it against the measured sinogram.

    The data range is the measured sinogram's own spread (max - min).
    """
    recon = check_image_array(recon, geom)
    p = check_sinogram_array(p_measured, geom)
    resino = forward_project(np.asarray(recon, dtype=np.float64), geom)
    spread = float(np.max(p) - np.min(p))
    if spread <= 0:
        spread = 1.0
    return MetricSample(
        method=method,
        space="sinogram",
        sample_id=sample_id,
        psnr_db=psnr(resino, p, spread),
        mse=mse(resino, p),
        ssim=ssim(resino, p, spread, win_size=win_size),
    )


def aggregate_report(entries) -> list:
    """Group samples by (method, space) into reports, deterministically ordered."""
    entries = list(entries)
    if not entries:
        raise ValueError("no metric samples to aggregate")
    groups: dict = {}
    for sample in entries:
        groups.setdefault((sample.method, sample.space), []).append(sample)
    reports = []
    for key in sorted(groups):
        samples = sorted(groups[key], key=lambda s: s.sample_id)
        reports.append(MetricReport.from_samples(samples))
    return reports


def report_csv(entries) -> str:
    """Per-sample CSV with the documented column order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in entries:
        writer.writerow([s.method, s.space, s.sample_id, repr(s.psnr_db), repr(s.mse), repr(s.ssim)])
    return buf.getvalue()


def read_report_csv(text: str) -> list:
    """Inverse of report_csv."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected report columns: {header}")
    samples = []
    for row in reader:
        if not row:
            continue
        samples.append(
            MetricSample(
                method=row[0],
                space=row[1],
                sample_id=int(row[2]),
                psnr_db=float(row[3]),
                mse=float(row[4]),
                ssim=float(row[5]),
            )
        )
    return samples


def _fmt(value: float, width: int = 10) -> str:
    return f"{value:>{width}.4g}"


def report_text(reports) -> str:
    """Aligned text table: one row per method with mean/spread columns."""
    lines = []
    header = (
        f"{'method':<16} {'space':<9} {'n':>4} "
        f"{'psnr':>10} {'±σ':>9} {'mse':>10} {'±σ':>9} {'σ²':>10} {'ssim':>10} {'±σ':>9}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for rep in reports:
        agg = rep.aggregates
        lines.append(
            f"{rep.method:<16} {rep.space:<9} {len(rep.samples):>4} "
            f"{_fmt(agg['psnr_db']['mean'])} {_fmt(agg['psnr_db']['std'], 9)} "
            f"{_fmt(agg['mse']['mean'])} {_fmt(agg['mse']['std'], 9)} "
            f"{_fmt(agg['mse']['var'])} "
            f"{_fmt(agg['ssim']['mean'])} {_fmt(agg['ssim']['std'], 9)}"
        )
    return "\n".join(lines) + "\n"
