"""PNG renderings of SGRD contents for visual inspection.

Three modes mirror the stages of the pipeline: superpixel boundaries with
centroid dots over the source photo, the occupancy of the cell grid, and
the per-cell label grid.
"""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage

from .errors import SigridError
from .imaging import Image
from .sgrd import SgrdFile

__all__ = ["render_boundaries", "render_occupancy", "render_labels", "RENDER_MODES"]

RENDER_MODES = ("boundaries", "occupancy", "labels")

_BOUNDARY_COLOR = np.array([255, 230, 60], dtype=np.uint8)  # yellow
_CENTROID_COLOR = np.array([230, 40, 40], dtype=np.uint8)  # red
_EMPTY_GRAY = 96


def render_boundaries(f: SgrdFile, img: Image, out_path) -> None:
    """Overlay superpixel borders and centroid dots on the source image."""
    if (img.width, img.height) != (f.image_width, f.image_height):
        raise SigridError(
            f"image is {img.width}x{img.height}, file expects "
            f"{f.image_width}x{f.image_height}"
        )
    canvas = (img.rgb().transpose(1, 2, 0) * 255).round().astype(np.uint8).copy()
    ids = f.map_ids
    boundary = np.zeros(ids.shape, dtype=bool)
    diff_h = ids[:, :-1] != ids[:, 1:]
    diff_v = ids[:-1, :] != ids[1:, :]
    boundary[:, :-1] |= diff_h
    boundary[:-1, :] |= diff_v
    canvas[boundary] = _BOUNDARY_COLOR

    keep = ids.ravel() > 0
    flat = ids.ravel()
    counts = np.bincount(flat[keep])
    h, w = ids.shape
    gx = np.tile(np.arange(w, dtype=np.float64) + 0.5, h)
    gy = np.repeat(np.arange(h, dtype=np.float64) + 0.5, w)
    sum_x = np.bincount(flat[keep], weights=gx[keep], minlength=len(counts))
    sum_y = np.bincount(flat[keep], weights=gy[keep], minlength=len(counts))
    for rid in f.region_ids:
        if counts[rid] == 0:
            continue
        cx = int(sum_x[rid] / counts[rid])
        cy = int(sum_y[rid] / counts[rid])
        y0, y1 = max(0, cy - 1), min(h, cy + 2)
        x0, x1 = max(0, cx - 1), min(w, cx + 2)
        canvas[y0:y1, x0:x1] = _CENTROID_COLOR
    PILImage.fromarray(canvas).save(out_path, format="PNG")


def render_occupancy(f: SgrdFile, out_path, scale: int = 8) -> None:
    """Filled cells of the grid, white on black."""
    occ = np.zeros((f.grid.grid_height, f.grid.grid_width), dtype=np.uint8)
    occ[f.rows, f.cols] = 255
    _save_scaled(occ, out_path, scale)


def render_labels(f: SgrdFile, out_path, scale: int = 8) -> None:
    """Label grid: EMPTY in gray, label 0 black, labels > 0 white."""
    grid = f.label_grid()  # raises when the section is missing
    img = np.full(grid.shape, _EMPTY_GRAY, dtype=np.uint8)
    img[grid == 0] = 0
    img[grid > 0] = 255
    _save_scaled(img, out_path, scale)


def _save_scaled(gray: np.ndarray, out_path, scale: int) -> None:
    if scale < 1:
        raise SigridError(f"scale must be >= 1, got {scale}")
    big = np.repeat(np.repeat(gray, scale, axis=0), scale, axis=1)
    PILImage.fromarray(big, mode="L").save(out_path, format="PNG")
