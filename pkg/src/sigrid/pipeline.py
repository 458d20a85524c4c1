"""Batch pipeline: per-image builds, worker pool, augmentation, summaries.

Batch outputs are deterministic: images are processed by sorted stem, each
worker runs the pure per-image pipeline, and every SGRD file depends only
on its own inputs, so results are byte-identical regardless of the worker
count.
"""

from __future__ import annotations

import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .assembly import build_sigrid, rasterize_labels
from .descriptors import DescriptorConfig
from .errors import SigridError
from .gridmap import GridSpec, map_to_grid, min_collision_free_grid
from .imaging import load_image, load_mask
from .metrics import max_iou
from .sgrd import sgrd_from_artifacts, write_sgrd
from .slic import SlicParams, slic_segment

__all__ = ["PipelineConfig", "BuildStats", "BatchResult", "build_one", "run_batch", "augment_corpus"]

IMAGE_EXTENSIONS = (".png", ".ppm", ".pgm")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the batch pipeline needs; mirrors the config-file keys."""

    input_dir: str | None = None
    mask_dir: str | None = None
    output_dir: str | None = None
    segments: int = 1500
    compactness: float = 20.0
    max_iterations: int = 10
    grid: str = "80"
    auto_grid: bool = False
    max_cells: int = 256
    descriptors: str = "ac,hu"
    workers: int = 1
    augment: bool = False
    beta: float = 0.3

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.auto_grid and self.grid != type(self).grid:
            # both a fixed grid and auto mode were requested
            raise ValueError("--grid and --auto-grid are mutually exclusive")

    def slic_params(self) -> SlicParams:
        return SlicParams(
            segments=self.segments,
            compactness=self.compactness,
            max_iterations=self.max_iterations,
        )

    def grid_spec(self) -> GridSpec:
        text = str(self.grid).lower()
        if "x" in text:
            w, h = text.split("x", 1)
            return GridSpec(int(w), int(h))
        n = int(text)
        return GridSpec(n, n)

    def descriptor_config(self) -> DescriptorConfig:
        return DescriptorConfig.from_names(self.descriptors)


_CONFIG_TYPES = {
    "segments": int,
    "max_iterations": int,
    "workers": int,
    "max_cells": int,
    "compactness": float,
    "beta": float,
    "auto_grid": lambda v: v.lower() in ("1", "true", "yes", "on"),
    "augment": lambda v: v.lower() in ("1", "true", "yes", "on"),
}


def parse_config_file(path) -> dict:
    """Line-oriented ``key = value`` settings; # starts a comment."""
    values = {}
    valid = set(PipelineConfig.__dataclass_fields__)
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SigridError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in valid:
            raise SigridError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _CONFIG_TYPES.get(key, str)(value)
    return values


def make_config(file_values: dict | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults <- config file <- explicit CLI overrides."""
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return PipelineConfig(**merged)


@dataclass
class BuildStats:
    stem: str
    image_path: str
    sgrd_path: str
    regions: int
    retained: int
    collision_rate: float
    max_iou: float | None
    seconds: float
    file_bytes: int


def build_one(image_path, mask_path, out_path, cfg: PipelineConfig) -> BuildStats:
    """Encode one image (and optional mask) into an SGRD file."""
    start = time.perf_counter()
    img = load_image(image_path)
    mask = load_mask(mask_path) if mask_path else None

    sp = slic_segment(img, cfg.slic_params())
    spec = min_collision_free_grid(sp, cfg.max_cells) if cfg.auto_grid else cfg.grid_spec()
    merged, ga = map_to_grid(sp, spec)
    sg = build_sigrid(img, merged, ga, cfg.descriptor_config())
    cells = rasterize_labels(mask, merged, ga) if mask is not None else None

    payload = sgrd_from_artifacts(sg, cells)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_sgrd(out_path, payload)

    bound = max_iou(mask, merged, ga) if mask is not None else None
    return BuildStats(
        stem=Path(image_path).stem,
        image_path=str(image_path),
        sgrd_path=str(out_path),
        regions=merged.region_count,
        retained=ga.retained_count,
        collision_rate=ga.collision_rate,
        max_iou=bound,
        seconds=time.perf_counter() - start,
        file_bytes=out_path.stat().st_size,
    )


@dataclass
class BatchResult:
    stats: list[BuildStats]
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def mean_collision_rate(self) -> float:
        return float(np.mean([s.collision_rate for s in self.stats])) if self.stats else 0.0

    @property
    def mean_max_iou(self) -> float | None:
        vals = [s.max_iou for s in self.stats if s.max_iou is not None]
        return float(np.mean(vals)) if vals else None

    @property
    def mean_seconds(self) -> float:
        return float(np.mean([s.seconds for s in self.stats])) if self.stats else 0.0

    def summary_text(self) -> str:
        miou = "n/a" if self.mean_max_iou is None else f"{self.mean_max_iou:.6f}"
        lines = [
            f"images            {len(self.stats)}",
            f"failures          {len(self.failures)}",
            f"mean collision    {self.mean_collision_rate:.6f}",
            f"mean max_iou      {miou}",
            f"mean build time   {self.mean_seconds:.3f}s",
        ]
        return "\n".join(lines) + "\n"


def list_images(directory) -> list[Path]:
    paths = [
        p
        for p in Path(directory).iterdir()
        if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file()
    ]
    return sorted(paths, key=lambda p: p.stem)


def find_mask(mask_dir, stem: str) -> Path | None:
    if mask_dir is None:
        return None
    for ext in IMAGE_EXTENSIONS:
        candidate = Path(mask_dir) / f"{stem}{ext}"
        if candidate.exists():
            return candidate
    return None


_AUGMENT_OPS = {
    "rot90": lambda a: np.rot90(a, 1),
    "rot180": lambda a: np.rot90(a, 2),
    "rot270": lambda a: np.rot90(a, 3),
    "fliph": lambda a: a[:, ::-1],
    "flipv": lambda a: a[::-1, :],
}


def augment_corpus(images, mask_dir, out_dir, variants: int = 3):
    """Expand each image (and its mask) with deterministic transforms.

    Runs before any superpixel computation. The transform choice is seeded
    from the file stem (crc32), so re-running reproduces the same files.
    Returns the list of (image_path, mask_path_or_None) produced.
    """
    out_images = Path(out_dir) / "augmented" / "images"
    out_masks = Path(out_dir) / "augmented" / "masks"
    out_images.mkdir(parents=True, exist_ok=True)
    produced = []
    names = sorted(_AUGMENT_OPS)
    for image_path in images:
        stem = image_path.stem
        rng = np.random.default_rng(zlib.crc32(stem.encode()))
        chosen = rng.choice(names, size=min(variants, len(names)), replace=False)
        img_arr = np.asarray(PILImage.open(image_path).convert("RGB"))
        mask_path = find_mask(mask_dir, stem)
        mask_arr = np.asarray(PILImage.open(mask_path).convert("L")) if mask_path else None
        for i, op_name in enumerate(chosen):
            op = _AUGMENT_OPS[op_name]
            new_stem = f"{stem}.aug{i}_{op_name}"
            img_out = out_images / f"{new_stem}.png"
            PILImage.fromarray(np.ascontiguousarray(op(img_arr))).save(img_out, format="PNG")
            mask_out = None
            if mask_arr is not None:
                out_masks.mkdir(parents=True, exist_ok=True)
                mask_out = out_masks / f"{new_stem}.png"
                PILImage.fromarray(np.ascontiguousarray(op(mask_arr))).save(mask_out, format="PNG")
            produced.append((img_out, mask_out))
    return produced


def _build_job(args):
    image_path, mask_path, out_path, cfg = args
    return build_one(image_path, mask_path, out_path, cfg)


def run_batch(cfg: PipelineConfig, log=None) -> BatchResult:
    """Process every image in ``cfg.input_dir``; see the module docstring
    for the determinism contract."""
    if not cfg.input_dir or not cfg.output_dir:
        raise SigridError("batch mode needs input_dir and output_dir")
    images = list_images(cfg.input_dir)
    if not images:
        raise SigridError(f"no images found in {cfg.input_dir}")
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    work = [(p, find_mask(cfg.mask_dir, p.stem)) for p in images]
    if cfg.augment:
        work += augment_corpus(images, cfg.mask_dir, out_dir)
        work.sort(key=lambda pair: Path(pair[0]).stem)

    jobs = [
        (str(img), str(mask) if mask else None, str(out_dir / f"{Path(img).stem}.sgrd"), cfg)
        for img, mask in work
    ]

    stats: list[BuildStats] = []
    failures: list[tuple[str, str]] = []
    if cfg.workers == 1:
        outcomes = []
        for job in jobs:
            try:
                outcomes.append(_build_job(job))
            except Exception as exc:  # noqa: BLE001 - reported per file
                outcomes.append((job[0], exc))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_build_job, job) for job in jobs]
            outcomes = []
            for job, fut in zip(jobs, futures):
                try:
                    outcomes.append(fut.result())
                except Exception as exc:  # noqa: BLE001
                    outcomes.append((job[0], exc))

    for outcome in outcomes:
        if isinstance(outcome, BuildStats):
            stats.append(outcome)
            if log:
                log(
                    f"{outcome.stem}: regions={outcome.regions} retained={outcome.retained} "
                    f"collisions={outcome.collision_rate:.4%} "
                    + (f"max_iou={outcome.max_iou:.4f} " if outcome.max_iou is not None else "")
                    + f"time={outcome.seconds:.2f}s"
                )
        else:
            path, exc = outcome
            failures.append((str(path), f"{type(exc).__name__}: {exc}"))
            if log:
                log(f"FAILED {path}: {exc}")

    result = BatchResult(stats=stats, failures=failures)
    (out_dir / "summary.txt").write_text(result.summary_text())
    rows = ["stem,regions,retained,collision_rate,max_iou,file_bytes"]
    for s in stats:
        miou = "" if s.max_iou is None else f"{s.max_iou:.6f}"
        rows.append(f"{s.stem},{s.regions},{s.retained},{s.collision_rate:.6f},{miou},{s.file_bytes}")
    (out_dir / "summary.csv").write_text("\n".join(rows) + "\n")
    return result
