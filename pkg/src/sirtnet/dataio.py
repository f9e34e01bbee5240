"""Phantom generation, low-dose simulation, Poisson noise, dataset assembly,
and the raw/sidecar file formats.

Phantoms are random additive-ellipse images clamped to [0, 1], rendered with
2x2 supersampling per pixel, every ellipse kept inside the inscribed field of
view so no view truncates.  Noise follows the standard transmission CT
simulation: photon counts are Poisson around I0 * exp(-p * mu), with a
dataset-wide attenuation scale mu that keeps the optical depth within ~4 so
count statistics stay informative.  Training data is noiseless by default;
noise belongs to the evaluation inputs.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import warnings

import numpy as np

from .geometry import ProjectionGeometry, forward_project
from .validation import check_image_array, output_dtype

__all__ = [
    "EllipsePhantomSpec",
    "Ellipse",
    "NoiseModel",
    "DatasetManifest",
    "generate_phantoms",
    "render_ellipses",
    "simulate_low_dose",
    "apply_poisson_noise",
    "attenuation_scale_for",
    "build_dataset",
    "load_dataset",
    "save_raw_image",
    "load_raw_image",
    "save_raw_sinogram",
    "load_raw_sinogram",
    "write_pgm",
    "import_grayscale_image",
]


@dataclasses.dataclass(frozen=True)
class Ellipse:
    """One additive ellipse in field-of-view units (half the image side = 1)."""

    center_x: float
    center_y: float
    semi_x: float
    semi_y: float
    rotation: float
    intensity: float


@dataclasses.dataclass(frozen=True)
class EllipsePhantomSpec:
    """Sampling ranges for random ellipse phantoms.

    Centers and semi-axes are drawn so that |center| + max(semi-axis) stays
    within ``max_extent`` of the inscribed disk, keeping every ellipse fully
    inside the field of view at all projection angles.
    """

    image_size: int = 64
    min_ellipses: int = 3
    max_ellipses: int = 8
    min_semi_axis: float = 0.08
    max_semi_axis: float = 0.45
    min_intensity: float = 0.2
    max_intensity: float = 0.6
    max_extent: float = 0.95

    def __post_init__(self):
        if self.image_size < 1:
            raise ValueError(f"image_size must be positive, got {self.image_size}")
        if not 1 <= self.min_ellipses <= self.max_ellipses:
            raise ValueError("need 1 <= min_ellipses <= max_ellipses")
        if not 0 < self.min_semi_axis <= self.max_semi_axis < 1:
            raise ValueError("semi-axis range must satisfy 0 < min <= max < 1")
        if not 0 < self.max_extent <= 1:
            raise ValueError("max_extent must be in (0, 1]")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def render_ellipses(image_size: int, ellipses, supersample: int = 2) -> np.ndarray:
    """Rasterize additive ellipses on the centred grid, clamped to [0, 1].

    ``supersample`` is the per-axis factor, so the default averages 4 samples
    per pixel.
    """
    fine = image_size * supersample
    coords = (np.arange(fine) + 0.5) / fine * 2.0 - 1.0
    xx, yy = np.meshgrid(coords, coords)
    acc = np.zeros((fine, fine), dtype=np.float64)
    for e in ellipses:
        c, s = math.cos(e.rotation), math.sin(e.rotation)
        dx = xx - e.center_x
        dy = yy - e.center_y
        u = (dx * c + dy * s) / e.semi_x
        v = (-dx * s + dy * c) / e.semi_y
        acc += np.where(u * u + v * v <= 1.0, e.intensity, 0.0)
    img = acc.reshape(image_size, supersample, image_size, supersample).mean(axis=(1, 3))
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def generate_phantoms(spec: EllipsePhantomSpec, count: int, seed) -> np.ndarray:
    """Draw ``count`` random phantoms; deterministic per (spec, seed)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    out = np.empty((count, spec.image_size, spec.image_size), dtype=np.float32)
    for i in range(count):
        n_ell = int(rng.integers(spec.min_ellipses, spec.max_ellipses + 1))
        ellipses = []
        for _ in range(n_ell):
            semi_x = rng.uniform(spec.min_semi_axis, spec.max_semi_axis)
            semi_y = rng.uniform(spec.min_semi_axis, spec.max_semi_axis)
            reach = spec.max_extent - max(semi_x, semi_y)
            radius = rng.uniform(0.0, max(reach, 0.0))
            azimuth = rng.uniform(0.0, 2.0 * math.pi)
            ellipses.append(
                Ellipse(
                    center_x=radius * math.cos(azimuth),
                    center_y=radius * math.sin(azimuth),
                    semi_x=semi_x,
                    semi_y=semi_y,
                    rotation=rng.uniform(0.0, math.pi),
                    intensity=rng.uniform(spec.min_intensity, spec.max_intensity),
                )
            )
        out[i] = render_ellipses(spec.image_size, ellipses)
    return out


def simulate_low_dose(image, geom: ProjectionGeometry) -> np.ndarray:
    """Project an image, or a stack of them, with the acquisition geometry."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        return forward_project(arr, geom)
    if arr.ndim != 3:
        raise ValueError(f"expected an image or image stack, got shape {arr.shape}")
    out = np.empty((arr.shape[0], geom.n_angles, geom.n_detectors), dtype=output_dtype(arr))
    for i in range(arr.shape[0]):
        out[i] = forward_project(arr[i], geom)
    return out


@dataclasses.dataclass(frozen=True)
class NoiseModel:
    """Photon-counting noise: counts ~ Poisson(I0 * exp(-p * scale)).

    ``attenuation_scale`` converts line integrals to optical depth; when
    None it is derived from the data being corrupted (see
    attenuation_scale_for).  Deterministic per seed.
    """

    i0: float
    seed: int = 0
    attenuation_scale: float | None = None

    def __post_init__(self):
        if self.i0 <= 0:
            raise ValueError(f"incident intensity must be positive, got {self.i0}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


MAX_OPTICAL_DEPTH = 4.0


def attenuation_scale_for(sinos) -> float:
    """Dataset-wide scale mapping the largest line integral to optical depth 4.

    Keeps the faintest ray at exp(-4) of the incident intensity, so Poisson
    statistics stay meaningful at every dose in the sweep.
    """
    peak = float(np.max(sinos))
    if peak <= 0:
        return 1.0
    return MAX_OPTICAL_DEPTH / peak


def apply_poisson_noise(sino, model: NoiseModel) -> np.ndarray:
    """Corrupt line integrals with photon-counting noise; returns noisy
    integrals of the same shape and storage dtype."""
    p = np.asarray(sino)
    if not np.all(np.isfinite(p)):
        raise ValueError("sinogram contains non-finite values")
    p64 = p.astype(np.float64)
    if np.any(p64 < 0):
        warnings.warn(
            "negative line integrals clamped to zero before noise simulation",
            stacklevel=2,
        )
        p64 = np.maximum(p64, 0.0)
    scale = model.attenuation_scale
    if scale is None:
        scale = attenuation_scale_for(p64)
    rng = np.random.default_rng(model.seed)
    expected = model.i0 * np.exp(-p64 * scale)
    counts = rng.poisson(expected).astype(np.float64)
    noisy = -np.log(np.maximum(counts, 1.0) / model.i0) / scale
    dtype = np.float64 if p.dtype == np.float64 else np.float32
    return noisy.astype(dtype)


def _write_raw(path: str, array: np.ndarray, sidecar: dict) -> None:
    base, _ = os.path.splitext(path)
    try:
        with open(path, "wb") as fh:
            fh.write(array.astype("<f4").tobytes())
        with open(base + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def _read_raw(path: str, expected_keys) -> tuple[np.ndarray, dict]:
    base, _ = os.path.splitext(path)
    try:
        with open(base + ".json", "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        blob = np.fromfile(path, dtype="<f4")
    except OSError as exc:
        raise OSError(f"failed reading {path}: {exc}") from exc
    missing = set(expected_keys) - set(sidecar)
    if missing:
        raise ValueError(f"{path}: sidecar is missing {sorted(missing)}")
    return blob, sidecar


def save_raw_image(path, image) -> None:
    """Write a square image as little-endian float32 with a JSON sidecar."""
    arr = check_image_array(image)
    _write_raw(os.fspath(path), arr, {"width": arr.shape[1], "height": arr.shape[0]})


def load_raw_image(path) -> np.ndarray:
    blob, sidecar = _read_raw(os.fspath(path), ("width", "height"))
    w, h = int(sidecar["width"]), int(sidecar["height"])
    if blob.size != w * h:
        raise ValueError(f"{path}: holds {blob.size} floats, sidecar says {h}x{w}")
    return blob.reshape(h, w).astype(np.float32)


def save_raw_sinogram(path, sino, geom: ProjectionGeometry | None = None) -> None:
    arr = np.asarray(sino)
    if arr.ndim != 2:
        raise ValueError(f"sinogram must be 2-D, got shape {arr.shape}")
    _write_raw(
        os.fspath(path), arr, {"n_angles": arr.shape[0], "n_detectors": arr.shape[1]}
    )


def load_raw_sinogram(path) -> np.ndarray:
    blob, sidecar = _read_raw(os.fspath(path), ("n_angles", "n_detectors"))
    a, d = int(sidecar["n_angles"]), int(sidecar["n_detectors"])
    if blob.size != a * d:
        raise ValueError(f"{path}: holds {blob.size} floats, sidecar says {a}x{d}")
    return blob.reshape(a, d).astype(np.float32)


def write_pgm(path, image, lo: float | None = None, hi: float | None = None) -> None:
    """Export an image as 16-bit binary PGM for eyeballing.

    Values are scaled from [lo, hi] (default: the image's own range) to the
    full 16-bit span, big-endian per the PGM specification.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"PGM export needs a 2-D image, got {arr.shape}")
    lo = float(arr.min()) if lo is None else float(lo)
    hi = float(arr.max()) if hi is None else float(hi)
    span = hi - lo if hi > lo else 1.0
    scaled = np.clip((arr - lo) / span, 0.0, 1.0)
    pixels = np.round(scaled * 65535.0).astype(">u2")
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())


def import_grayscale_image(path, image_size: int) -> np.ndarray:
    """Load an external raster image as a min-max scaled square float image."""
    from PIL import Image

    with Image.open(path) as img:
        img = img.convert("F")
        img = img.resize((image_size, image_size), Image.BILINEAR)
        arr = np.asarray(img, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        arr = (arr - lo) / (hi - lo)
    else:
        arr = np.zeros_like(arr)
    return arr.astype(np.float32)


@dataclasses.dataclass
class DatasetManifest:
    """Index of a dataset directory: file lists per split plus the constants
    needed to interpret them."""

    geometry: ProjectionGeometry
    train: list
    validation: list
    test: list
    normalization: dict
    attenuation_scale: float
    noise: dict | None
    split_seed: int
    train_fraction: float

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry.to_dict(),
            "train": self.train,
            "validation": self.validation,
            "test": self.test,
            "normalization": self.normalization,
            "attenuation_scale": self.attenuation_scale,
            "noise": self.noise,
            "split_seed": self.split_seed,
            "train_fraction": self.train_fraction,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetManifest":
        return cls(
            geometry=ProjectionGeometry.from_dict(doc["geometry"]),
            train=list(doc["train"]),
            validation=list(doc["validation"]),
            test=list(doc["test"]),
            normalization=dict(doc["normalization"]),
            attenuation_scale=float(doc["attenuation_scale"]),
            noise=doc.get("noise"),
            split_seed=int(doc["split_seed"]),
            train_fraction=float(doc["train_fraction"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _entry_arrays(directory: str, entries) -> tuple[np.ndarray, np.ndarray]:
    images = np.stack([load_raw_image(os.path.join(directory, e["image"])) for e in entries])
    sinos = np.stack([load_raw_sinogram(os.path.join(directory, e["sinogram"])) for e in entries])
    return images, sinos


def build_dataset(
    images,
    geom: ProjectionGeometry,
    directory,
    *,
    noise: NoiseModel | None = None,
    split_seed: int = 0,
    train_fraction: float = 0.8,
    test_images=None,
) -> DatasetManifest:
    """Project, optionally corrupt, write files and split into train/val.

    ``images`` feed the train/validation split; ``test_images`` (optional)
    form the held-out test list.  The attenuation scale is computed over all
    clean sinograms and recorded, so every later noise level uses the same
    units.  Returns the manifest, also written to ``directory``/manifest.json.
    """
    stack = np.asarray(images, dtype=np.float32)
    if stack.ndim != 3 or stack.shape[0] == 0:
        raise ValueError(f"images must be a nonempty (count, n, n) stack, got {stack.shape}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    test_stack = None
    if test_images is not None:
        test_stack = np.asarray(test_images, dtype=np.float32)
        if test_stack.ndim != 3:
            raise ValueError(f"test_images must be (count, n, n), got {test_stack.shape}")

    all_images = stack if test_stack is None else np.concatenate([stack, test_stack])
    clean = np.stack([simulate_low_dose(img, geom) for img in all_images])
    scale = attenuation_scale_for(clean)
    sinos = clean
    noise_doc = None
    if noise is not None:
        model = dataclasses.replace(noise, attenuation_scale=scale)
        sinos = np.stack(
            [
                apply_poisson_noise(
                    clean[i], dataclasses.replace(model, seed=int(model.seed) + i)
                )
                for i in range(clean.shape[0])
            ]
        )
        noise_doc = {"i0": noise.i0, "seed": noise.seed}

    entries = []
    width = len(str(all_images.shape[0]))
    for i in range(all_images.shape[0]):
        img_name = f"img_{i:0{width}d}.raw"
        sino_name = f"sino_{i:0{width}d}.raw"
        save_raw_image(os.path.join(directory, img_name), all_images[i])
        save_raw_sinogram(os.path.join(directory, sino_name), sinos[i])
        entries.append({"image": img_name, "sinogram": sino_name})

    n_main = stack.shape[0]
    rng = np.random.default_rng(split_seed)
    order = rng.permutation(n_main)
    n_train = int(round(n_main * train_fraction))
    n_train = min(max(n_train, 1), n_main - 1) if n_main > 1 else n_main
    train_idx = sorted(order[:n_train].tolist())
    val_idx = sorted(order[n_train:].tolist())
    manifest = DatasetManifest(
        geometry=geom,
        train=[entries[i] for i in train_idx],
        validation=[entries[i] for i in val_idx],
        test=entries[n_main:],
        normalization={"lo": float(all_images.min()), "hi": float(all_images.max())},
        attenuation_scale=scale,
        noise=noise_doc,
        split_seed=int(split_seed),
        train_fraction=float(train_fraction),
    )
    manifest.save(os.path.join(directory, "manifest.json"))
    return manifest


def load_dataset(directory) -> tuple[DatasetManifest, dict]:
    """Read a dataset directory back into arrays.

    Returns (manifest, splits) where splits maps "train"/"validation"/"test"
    to (images, sinograms) stacks; empty splits map to None.
    """
    directory = os.fspath(directory)
    manifest = DatasetManifest.load(os.path.join(directory, "manifest.json"))
    expected_img = (manifest.geometry.image_size, manifest.geometry.image_size)
    expected_sino = (manifest.geometry.n_angles, manifest.geometry.n_detectors)
    splits = {}
    for name, entries in (
        ("train", manifest.train),
        ("validation", manifest.validation),
        ("test", manifest.test),
    ):
        if not entries:
            splits[name] = None
            continue
        images, sinos = _entry_arrays(directory, entries)
        if images.shape[1:] != expected_img:
            raise ValueError(f"{name} images are {images.shape[1:]}, expected {expected_img}")
        if sinos.shape[1:] != expected_sino:
            raise ValueError(f"{name} sinograms are {sinos.shape[1:]}, expected {expected_sino}")
        splits[name] = (images, sinos)
    return manifest, splits
