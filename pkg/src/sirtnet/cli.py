"""Command line front end.

Subcommands cover the whole workflow: phantom generation, measurement
simulation, training, reconstruction, evaluation, a dose sweep, and
checkpoint inspection.  Every run is described by a JSON config file whose
keys are validated strictly (unknown keys are an error), and the effective
configuration is written into the output directory next to the results.

Exit codes: 0 on success, 2 for configuration problems (bad JSON, unknown or
invalid keys, bad command line), 1 for runtime failures (missing files,
inconsistent data, diverged training).  Relative --data/--checkpoint paths
resolve against $SIRTNET_DATA_DIR when it is set.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys

import numpy as np

from .dataio import (
    DatasetManifest,
    EllipsePhantomSpec,
    NoiseModel,
    apply_poisson_noise,
    build_dataset,
    generate_phantoms,
    load_dataset,
    load_raw_image,
    save_raw_image,
    write_pgm,
)
from .geometry import ProjectionGeometry, forward_project
from .metrics import (
    MetricSample,
    aggregate_report,
    image_metrics,
    mse,
    psnr,
    report_csv,
    report_text,
    ssim,
)
from .network.io import load_checkpoint
from .pipeline import (
    PipelineConfig,
    TrainingDivergedError,
    load_pipeline,
    reconstruct,
    save_pipeline,
    train_pipeline,
)
from .solvers import cgls, fbp, sirt_run

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

DATA_DIR_ENV = "SIRTNET_DATA_DIR"

# fixed stream indices so each subsystem draws from its own seed lineage
PHANTOM_STREAM = 10
NOISE_STREAM = 11
SPLIT_STREAM = 12

RECON_METHODS = ("fbp", "sirt", "cgls", "sirt+dnn")


class ConfigError(ValueError):
    """A problem with the run configuration (as opposed to the run itself)."""


_REQUIRED = object()


class RunConfig:
    """One validated JSON run description.

    Keys are consumed with ``take``; ``finish`` rejects anything left over
    and returns the effective configuration including applied defaults.
    """

    def __init__(self, doc: dict, source: str = "<defaults>"):
        if not isinstance(doc, dict):
            raise ConfigError(f"{source}: config must be a JSON object")
        self._doc = dict(doc)
        self._effective: dict = {}
        self.source = source

    @classmethod
    def load(cls, path: str | None) -> "RunConfig":
        if path is None:
            return cls({}, "<defaults>")
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls(doc, path)

    def _convert(self, key, value, kind):
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{self.source}: '{key}' must be a number")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{self.source}: '{key}' must be an integer")
            return value
        if not isinstance(value, kind):
            raise ConfigError(f"{self.source}: '{key}' must be of type {kind.__name__}")
        return value

    def take(self, key, kind, default=_REQUIRED, allow_none: bool = False):
        if key in self._doc:
            value = self._doc.pop(key)
        elif default is _REQUIRED:
            raise ConfigError(f"{self.source}: missing required key '{key}'")
        else:
            value = default
        if value is None and (allow_none or default is None):
            self._effective[key] = None
            return None
        value = self._convert(key, value, kind)
        self._effective[key] = value
        return value

    def record(self, key, value):
        """Note a derived effective value (e.g. a validated sub-config)."""
        self._effective[key] = value

    def finish(self) -> dict:
        if self._doc:
            raise ConfigError(f"{self.source}: unknown config keys: {sorted(self._doc)}")
        return dict(self._effective)


def _wrap_config_errors(source, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def take_geometry(cfg: RunConfig) -> ProjectionGeometry:
    doc = cfg.take("geometry", dict)
    geom = _wrap_config_errors(cfg.source, ProjectionGeometry.from_dict, doc)
    cfg.record("geometry", geom.to_dict())
    return geom


def take_pipeline(cfg: RunConfig) -> PipelineConfig:
    doc = cfg.take("pipeline", dict, default={})
    pipe = _wrap_config_errors(cfg.source, PipelineConfig.from_dict, doc)
    cfg.record("pipeline", pipe.to_dict())
    return pipe


def take_phantom_spec(cfg: RunConfig, image_size: int) -> EllipsePhantomSpec:
    doc = cfg.take("phantom", dict, default={})
    known = {f.name for f in dataclasses.fields(EllipsePhantomSpec)} - {"image_size"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{cfg.source}: unknown phantom keys: {sorted(unknown)}")
    spec = _wrap_config_errors(
        cfg.source, EllipsePhantomSpec, image_size=image_size, **doc
    )
    cfg.record("phantom", {k: v for k, v in spec.to_dict().items() if k != "image_size"})
    return spec


def take_noise(cfg: RunConfig, default_seed: int) -> NoiseModel | None:
    doc = cfg.take("noise", dict, default=None, allow_none=True)
    if doc is None:
        return None
    unknown = set(doc) - {"i0", "seed"}
    if unknown:
        raise ConfigError(f"{cfg.source}: unknown noise keys: {sorted(unknown)}")
    if "i0" not in doc:
        raise ConfigError(f"{cfg.source}: noise needs an 'i0' intensity")
    model = _wrap_config_errors(
        cfg.source,
        NoiseModel,
        i0=float(doc["i0"]),
        seed=int(doc.get("seed", default_seed)),
    )
    cfg.record("noise", {"i0": model.i0, "seed": model.seed})
    return model


def take_methods(cfg: RunConfig, default: list) -> list:
    methods = cfg.take("methods", list, default=list(default))
    for m in methods:
        if m not in RECON_METHODS:
            raise ConfigError(
                f"{cfg.source}: unknown method '{m}' (choose from {', '.join(RECON_METHODS)})"
            )
    if not methods:
        raise ConfigError(f"{cfg.source}: 'methods' must not be empty")
    return methods


def stream_seed(root_seed: int, stream: int) -> int:
    """Derive an independent integer seed for one subsystem."""
    return int(np.random.SeedSequence([int(root_seed), stream]).generate_state(1)[0])


def resolve_data_path(path: str) -> str:
    base = os.environ.get(DATA_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _write_effective_config(outdir: str, doc: dict) -> None:
    with open(os.path.join(outdir, "run_config.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_split(directory: str, split: str):
    manifest, splits = load_dataset(directory)
    if split not in splits:
        raise ConfigError(f"unknown split '{split}' (train, validation, test)")
    if splits[split] is None:
        raise ValueError(f"{directory}: split '{split}' is empty")
    return manifest, splits[split]


def _sino_ssim_window(geom: ProjectionGeometry) -> int:
    win = min(11, geom.n_angles, geom.n_detectors)
    if win % 2 == 0:
        win -= 1
    return max(win, 3)


def _sinogram_sample(recon, measured, geom, method, sample_id) -> MetricSample:
    resino = forward_project(np.asarray(recon, dtype=np.float64), geom)
    measured = np.asarray(measured, dtype=np.float64)
    spread = float(measured.max() - measured.min())
    if spread <= 0:
        spread = 1.0
    return MetricSample(
        method=method,
        space="sinogram",
        sample_id=sample_id,
        psnr_db=psnr(resino, measured, spread),
        mse=mse(resino, measured),
        ssim=ssim(resino, measured, spread, win_size=_sino_ssim_window(geom)),
    )


def _reconstruct_with(method, sinos, geom, checkpoint, sirt_iters, cgls_iters) -> np.ndarray:
    n = geom.image_size
    out = np.empty((sinos.shape[0], n, n), dtype=np.float64)
    for i in range(sinos.shape[0]):
        p = np.asarray(sinos[i], dtype=np.float64)
        if method == "fbp":
            out[i] = fbp(p, geom)
        elif method == "sirt":
            out[i] = sirt_run(np.zeros((n, n)), p, geom, sirt_iters)
        elif method == "cgls":
            out[i] = cgls(p, geom, cgls_iters)
        elif method == "sirt+dnn":
            out[i], _ = reconstruct(p, geom, checkpoint)
        else:
            raise ConfigError(f"unknown method '{method}'")
    return out


def _budget_iterations(checkpoint) -> int:
    cfg = checkpoint.config
    blocks = cfg.n_stages + (1 if cfg.final_sirt else 0)
    return blocks * cfg.sirt_iters_per_block


def _require_checkpoint(args, methods):
    if "sirt+dnn" not in methods:
        return None
    if not args.checkpoint:
        raise ConfigError("method 'sirt+dnn' needs --checkpoint")
    return load_pipeline(resolve_data_path(args.checkpoint))


def cmd_phantoms(args) -> int:
    cfg = RunConfig.load(args.config)
    count = cfg.take("count", int)
    if count < 1:
        raise ConfigError(f"{cfg.source}: 'count' must be >= 1")
    seed = cfg.take("seed", int, default=0)
    image_size = cfg.take("image_size", int, default=64)
    preview = cfg.take("preview", bool, default=False)
    spec = take_phantom_spec(cfg, image_size)
    effective = cfg.finish()

    images = generate_phantoms(spec, count, seed=np.random.SeedSequence([seed, PHANTOM_STREAM]))
    os.makedirs(args.output, exist_ok=True)
    width = len(str(count))
    for i in range(count):
        name = f"phantom_{i:0{width}d}"
        save_raw_image(os.path.join(args.output, name + ".raw"), images[i])
        if preview:
            write_pgm(os.path.join(args.output, name + ".pgm"), images[i], lo=0.0, hi=1.0)
    _write_effective_config(args.output, effective)
    print(f"wrote {count} phantoms to {args.output}")
    return EXIT_OK


def _load_phantom_dir(directory: str) -> np.ndarray:
    try:
        names = sorted(
            f for f in os.listdir(directory) if re.fullmatch(r"phantom_\d+\.raw", f)
        )
    except OSError as exc:
        raise OSError(f"cannot list phantom directory {directory}: {exc}") from exc
    if not names:
        raise ValueError(f"{directory} holds no phantom_*.raw files")
    return np.stack([load_raw_image(os.path.join(directory, n)) for n in names])


def cmd_simulate(args) -> int:
    cfg = RunConfig.load(args.config)
    geom = take_geometry(cfg)
    seed = cfg.take("seed", int, default=0)
    train_fraction = cfg.take("train_fraction", float, default=0.8)
    test_count = cfg.take("test_count", int, default=0)
    noise = take_noise(cfg, default_seed=stream_seed(seed, NOISE_STREAM))
    effective = cfg.finish()

    images = _load_phantom_dir(resolve_data_path(args.phantoms))
    if images.shape[1] != geom.image_size:
        raise ValueError(
            f"phantoms are {images.shape[1]}x{images.shape[2]}, geometry wants {geom.image_size}"
        )
    if not 0 <= test_count < images.shape[0]:
        raise ConfigError(
            f"test_count must be in [0, {images.shape[0]}), got {test_count}"
        )
    main_images = images[: images.shape[0] - test_count]
    test_images = images[images.shape[0] - test_count:] if test_count else None
    os.makedirs(args.output, exist_ok=True)
    manifest = build_dataset(
        main_images,
        geom,
        args.output,
        noise=noise,
        split_seed=stream_seed(seed, SPLIT_STREAM),
        train_fraction=train_fraction,
        test_images=test_images,
    )
    _write_effective_config(args.output, effective)
    print(
        f"dataset at {args.output}: {len(manifest.train)} train, "
        f"{len(manifest.validation)} validation, {len(manifest.test)} test"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = RunConfig.load(args.config)
    pipe = take_pipeline(cfg)
    effective = cfg.finish()

    data_dir = resolve_data_path(args.data)
    manifest, splits = load_dataset(data_dir)
    if splits["train"] is None or splits["validation"] is None:
        raise ValueError(f"{data_dir}: training needs nonempty train and validation splits")
    train_images, train_sinos = splits["train"]
    val_images, val_sinos = splits["validation"]

    def progress(info):
        if not args.quiet:
            print(
                f"stage {info['stage']}/{pipe.n_stages} "
                f"epoch {info['epoch']}/{pipe.epochs_per_stage} "
                f"train {info['train_loss']:.4e} val {info['val_loss']:.4e}"
            )

    checkpoint = train_pipeline(
        (train_images, train_sinos),
        (val_images, val_sinos),
        manifest.geometry,
        pipe,
        progress=progress,
    )
    os.makedirs(args.output, exist_ok=True)
    save_pipeline(checkpoint, args.output)
    _write_effective_config(args.output, effective)
    print(f"checkpoint saved to {args.output}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = RunConfig.load(args.config)
    method = cfg.take("method", str, default="sirt+dnn")
    if method not in RECON_METHODS:
        raise ConfigError(
            f"{cfg.source}: unknown method '{method}' (choose from {', '.join(RECON_METHODS)})"
        )
    split = cfg.take("split", str, default="test")
    sirt_iters = cfg.take("sirt_iters", int, default=None, allow_none=True)
    cgls_iters = cfg.take("cgls_iters", int, default=20)
    preview = cfg.take("preview", bool, default=False)
    effective = cfg.finish()

    checkpoint = _require_checkpoint(args, [method])
    manifest, (images, sinos) = _load_split(resolve_data_path(args.data), split)
    geom = manifest.geometry
    if checkpoint is not None and checkpoint.geom != geom:
        raise ValueError("checkpoint geometry does not match the dataset")
    if sirt_iters is None:
        sirt_iters = _budget_iterations(checkpoint) if checkpoint else 200

    recons = _reconstruct_with(method, sinos, geom, checkpoint, sirt_iters, cgls_iters)
    os.makedirs(args.output, exist_ok=True)
    width = len(str(recons.shape[0]))
    for i in range(recons.shape[0]):
        name = f"recon_{i:0{width}d}"
        save_raw_image(os.path.join(args.output, name + ".raw"), recons[i])
        if preview:
            write_pgm(os.path.join(args.output, name + ".pgm"), recons[i], lo=0.0, hi=1.0)
    _write_effective_config(args.output, effective)
    print(f"wrote {recons.shape[0]} reconstructions ({method}) to {args.output}")
    return EXIT_OK


def _evaluate_methods(methods, images, sinos, geom, checkpoint, sirt_iters, cgls_iters):
    samples = []
    for method in methods:
        recons = _reconstruct_with(method, sinos, geom, checkpoint, sirt_iters, cgls_iters)
        for i in range(recons.shape[0]):
            samples.append(image_metrics(recons[i], images[i], method=method, sample_id=i))
            samples.append(_sinogram_sample(recons[i], sinos[i], geom, method, i))
    return samples


def cmd_evaluate(args) -> int:
    cfg = RunConfig.load(args.config)
    methods = take_methods(cfg, ["fbp", "sirt", "sirt+dnn"])
    split = cfg.take("split", str, default="test")
    sirt_iters = cfg.take("sirt_iters", int, default=None, allow_none=True)
    cgls_iters = cfg.take("cgls_iters", int, default=20)
    effective = cfg.finish()

    checkpoint = _require_checkpoint(args, methods)
    manifest, (images, sinos) = _load_split(resolve_data_path(args.data), split)
    geom = manifest.geometry
    if checkpoint is not None and checkpoint.geom != geom:
        raise ValueError("checkpoint geometry does not match the dataset")
    if sirt_iters is None:
        sirt_iters = _budget_iterations(checkpoint) if checkpoint else 200

    samples = _evaluate_methods(
        methods, images.astype(np.float64), sinos.astype(np.float64), geom,
        checkpoint, sirt_iters, cgls_iters,
    )
    table = report_text(aggregate_report(samples))
    os.makedirs(args.output, exist_ok=True)
    with open(os.path.join(args.output, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(report_csv(samples))
    with open(os.path.join(args.output, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    _write_effective_config(args.output, effective)
    print(table, end="")
    return EXIT_OK


def cmd_sweep_noise(args) -> int:
    cfg = RunConfig.load(args.config)
    i0_values = cfg.take("i0_values", list)
    if not i0_values or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in i0_values
    ):
        raise ConfigError(f"{cfg.source}: 'i0_values' must be a nonempty list of positive numbers")
    i0_values = [float(v) for v in i0_values]
    methods = take_methods(cfg, ["fbp", "sirt", "sirt+dnn"])
    split = cfg.take("split", str, default="test")
    seed = cfg.take("seed", int, default=0)
    sirt_iters = cfg.take("sirt_iters", int, default=None, allow_none=True)
    cgls_iters = cfg.take("cgls_iters", int, default=20)
    effective = cfg.finish()

    checkpoint = _require_checkpoint(args, methods)
    manifest, (images, _) = _load_split(resolve_data_path(args.data), split)
    geom = manifest.geometry
    if checkpoint is not None and checkpoint.geom != geom:
        raise ValueError("checkpoint geometry does not match the dataset")
    if sirt_iters is None:
        sirt_iters = _budget_iterations(checkpoint) if checkpoint else 200

    images = images.astype(np.float64)
    clean = np.stack([forward_project(img, geom) for img in images])
    scale = manifest.attenuation_scale
    noise_seed = stream_seed(seed, NOISE_STREAM)

    os.makedirs(args.output, exist_ok=True)
    summary = {"i0_values": i0_values, "split": split, "mean_psnr_db": {m: [] for m in methods}}
    for i0 in i0_values:
        noisy = np.stack(
            [
                apply_poisson_noise(
                    clean[i],
                    NoiseModel(i0=i0, seed=noise_seed + i, attenuation_scale=scale),
                )
                for i in range(clean.shape[0])
            ]
        )
        samples = _evaluate_methods(
            methods, images, noisy, geom, checkpoint, sirt_iters, cgls_iters
        )
        with open(
            os.path.join(args.output, f"metrics_i0_{i0:g}.csv"), "w", encoding="utf-8"
        ) as fh:
            fh.write(report_csv(samples))
        for rep in aggregate_report(samples):
            if rep.space == "image":
                summary["mean_psnr_db"][rep.method].append(rep.aggregates["psnr_db"]["mean"])
    with open(os.path.join(args.output, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    _write_effective_config(args.output, effective)
    for method in methods:
        vals = " ".join(f"{v:8.3f}" for v in summary["mean_psnr_db"][method])
        print(f"{method:<10} {vals}")
    return EXIT_OK


def cmd_inspect_checkpoint(args) -> int:
    path = resolve_data_path(args.path)
    if os.path.isdir(path):
        checkpoint = load_pipeline(path)
        cfg = checkpoint.config
        print(f"pipeline checkpoint: {path}")
        print(
            f"  stages {cfg.n_stages}, {cfg.sirt_iters_per_block} SIRT iterations per block, "
            f"final block {'on' if cfg.final_sirt else 'off'}"
        )
        print(
            f"  network depth {cfg.depth}, dilation period {cfg.dilation_period}, "
            f"{checkpoint.nets[0].n_params if checkpoint.nets else 0} parameters per stage"
        )
        g = checkpoint.geom
        print(f"  geometry: {g.n_angles} angles, {g.n_detectors} detectors, image {g.image_size}")
        if checkpoint.losses:
            finals = {}
            for stage, _, _, val in checkpoint.losses:
                finals[stage] = val
            tail = ", ".join(f"stage {s}: {v:.4e}" for s, v in sorted(finals.items()))
            print(f"  final validation losses: {tail}")
        return EXIT_OK
    net, header = load_checkpoint(path)
    print(f"network checkpoint: {path}")
    print(f"  depth {net.depth}, dilation period {net.dilation_period}, {net.n_params} parameters")
    if header.get("seed") is not None:
        print(f"  seed {header['seed']}")
    if header.get("adam"):
        hyper = ", ".join(f"{k}={v}" for k, v in sorted(header["adam"].items()))
        print(f"  adam: {hyper}")
    if header.get("metadata"):
        print(f"  metadata: {json.dumps(header['metadata'], sort_keys=True)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sirtnet",
        description="Tomographic reconstruction with interleaved SIRT and learned corrections.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="BLAS thread cap applied at startup (default 1, keeps runs deterministic)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantoms", help="generate random ellipse phantoms")
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(handler=cmd_phantoms)

    p = sub.add_parser("simulate", help="project phantoms into a measured dataset")
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("--phantoms", required=True, help="directory from the phantoms command")
    p.add_argument("-o", "--output", required=True, help="dataset output directory")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("train", help="train the interleaved pipeline on a dataset")
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("-o", "--output", required=True, help="checkpoint output directory")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress per-epoch lines")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("reconstruct", help="reconstruct a dataset split")
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--checkpoint", help="pipeline checkpoint directory")
    p.add_argument("-o", "--output", required=True, help="reconstruction output directory")
    p.set_defaults(handler=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score reconstruction methods on a split")
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--checkpoint", help="pipeline checkpoint directory")
    p.add_argument("-o", "--output", required=True, help="report output directory")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("sweep-noise", help="evaluate methods across incident intensities")
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("--data", required=True, help="dataset directory (clean images)")
    p.add_argument("--checkpoint", help="pipeline checkpoint directory")
    p.add_argument("-o", "--output", required=True, help="sweep output directory")
    p.set_defaults(handler=cmd_sweep_noise)

    p = sub.add_parser("inspect-checkpoint", help="describe a checkpoint file or directory")
    p.add_argument("path", help="pipeline directory or .msd file")
    p.set_defaults(handler=cmd_inspect_checkpoint)

    return parser


def _cap_threads(n: int) -> None:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    _cap_threads(args.threads)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDivergedError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
