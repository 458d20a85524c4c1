"""Grid tensor assembly, label rasterization, and back-projection.

The sparse grid holds one descriptor vector per retained superpixel at the
cell its centroid was assigned to; all other cells are zero when the grid
is materialized densely. Ground-truth masks travel the same route: each
retained region's cell receives the majority pixel label of the region,
and unassigned cells carry the EMPTY sentinel so downstream losses and
metrics can skip them.

Back-projection is the inverse: every pixel of a retained region takes its
cell's value, and pixels of discarded regions (collision losers) fall back
to the value of the nearest retained centroid, so output masks are total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptors import DescriptorConfig, compute_descriptor_matrix
from .errors import DimensionMismatchError
from .gridmap import GridAssignment, GridSpec
from .imaging import Image, Mask, Superpixelation

__all__ = [
    "EMPTY",
    "CellLabelGrid",
    "Sigrid",
    "build_sigrid",
    "rasterize_labels",
    "backproject",
    "expand_cell_values",
    "expand_masked_map",
    "masked_region_map",
    "rasterize_masked_map",
]

EMPTY = -1  # sentinel for cells with no assigned superpixel


@dataclass(frozen=True)
class CellLabelGrid:
    """Per-cell class labels; EMPTY marks cells without a superpixel."""

    spec: GridSpec
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        expected = (self.spec.grid_height, self.spec.grid_width)
        if labels.shape != expected:
            raise ValueError(f"label grid shape {labels.shape} != {expected}")
        labels = np.ascontiguousarray(labels.astype(np.int16, copy=False))
        if labels.size and labels.min() < EMPTY:
            raise ValueError("labels must be >= -1 (EMPTY)")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def occupied(self) -> np.ndarray:
        return self.labels != EMPTY


@dataclass(frozen=True)
class Sigrid:
    """Sparse descriptor grid plus everything needed to undo it.

    ``cells`` maps (row, col) to the descriptor vector of the retained
    region there; the keys correspond one-to-one with the assignment's
    retained cells. The source superpixelation (post-merge) and dimensions
    are kept so predictions on the grid can be expanded back to pixels.
    """

    spec: GridSpec
    channels: int
    cells: dict[tuple[int, int], np.ndarray]
    assignment: GridAssignment
    source_superpixelation: Superpixelation
    source_dims: tuple[int, int]  # (width, height)
    config: DescriptorConfig = DescriptorConfig()

    def __post_init__(self):
        if self.channels != self.config.channels:
            raise ValueError(
                f"channel count {self.channels} != configured {self.config.channels}"
            )
        expected = {cell for cell in self.assignment.assignments.values()}
        if set(self.cells) != expected:
            raise ValueError("cells do not match the assignment's retained cells")
        for vec in self.cells.values():
            if vec.shape != (self.channels,):
                raise ValueError(f"descriptor length {vec.shape} != ({self.channels},)")

    def dense(self) -> np.ndarray:
        """Materialize to (channels, grid_h, grid_w); unassigned cells are 0."""
        out = np.zeros((self.channels, self.spec.grid_height, self.spec.grid_width))
        for (row, col), vec in self.cells.items():
            out[:, row, col] = vec
        return out

    @property
    def occupancy(self) -> np.ndarray:
        occ = np.zeros((self.spec.grid_height, self.spec.grid_width), dtype=bool)
        for row, col in self.cells:
            occ[row, col] = True
        return occ


def build_sigrid(
    img: Image, sp: Superpixelation, ga: GridAssignment, cfg: DescriptorConfig
) -> Sigrid:
    """Compute descriptors and place retained regions' vectors on the grid.

    ``sp`` must be the (post-merge) superpixelation the assignment was
    computed from; discarded regions contribute nothing.
    """
    if (img.width, img.height) != (sp.width, sp.height):
        raise DimensionMismatchError(
            f"image {img.width}x{img.height} vs superpixelation {sp.width}x{sp.height}"
        )
    _check_assignment(sp, ga)
    matrix = compute_descriptor_matrix(img, sp, cfg)
    cells = {cell: matrix[rid - 1] for rid, cell in ga.assignments.items()}
    return Sigrid(
        spec=ga.spec,
        channels=cfg.channels,
        cells=cells,
        assignment=ga,
        source_superpixelation=sp,
        source_dims=(img.width, img.height),
        config=cfg,
    )


def rasterize_labels(mask: Mask, sp: Superpixelation, ga: GridAssignment) -> CellLabelGrid:
    """Majority pixel label per retained region, written at its cell.

    Ties break toward the lower label id; every cell without a retained
    region is EMPTY.
    """
    if (mask.width, mask.height) != (sp.width, sp.height):
        raise DimensionMismatchError(
            f"mask {mask.width}x{mask.height} vs superpixelation {sp.width}x{sp.height}"
        )
    _check_assignment(sp, ga)
    k = sp.region_count
    n_labels = int(mask.labels.max()) + 1
    key = (sp.region_ids.ravel().astype(np.int64) - 1) * n_labels + mask.labels.ravel()
    table = np.bincount(key, minlength=k * n_labels).reshape(k, n_labels)
    modal = table.argmax(axis=1)  # argmax takes the first maximum: lower label wins ties

    grid = np.full((ga.spec.grid_height, ga.spec.grid_width), EMPTY, dtype=np.int16)
    for rid, (row, col) in ga.assignments.items():
        grid[row, col] = modal[rid - 1]
    return CellLabelGrid(ga.spec, grid)


def masked_region_map(sp: Superpixelation, ga: GridAssignment) -> np.ndarray:
    """Region-id raster with discarded regions' pixels zeroed out.

    This is the self-contained form used for back-projection (and the one
    the on-disk format stores): retained pixels keep their id, everything a
    collision removed becomes 0.
    """
    if ga.discarded:
        return np.where(np.isin(sp.region_ids, np.asarray(ga.discarded)), 0, sp.region_ids)
    return sp.region_ids.copy()


def expand_masked_map(
    values: np.ndarray,
    masked_ids: np.ndarray,
    retained_ids: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
) -> np.ndarray:
    """Core of back-projection, shared with the file-based path.

    ``masked_ids`` uses 0 for pixels of discarded regions; every other id
    must appear in ``retained_ids`` with its cell at the matching position
    of ``rows``/``cols``. Discarded pixels receive the value of the
    spatially nearest retained centroid (Euclidean distance to the pixel
    center, ties toward the lower region id).
    """
    order = np.argsort(retained_ids, kind="stable")
    retained_ids, rows, cols = retained_ids[order], rows[order], cols[order]
    cell_vals = values[rows, cols]

    per_region = np.zeros(int(masked_ids.max()) + 1, dtype=values.dtype)
    per_region[retained_ids] = cell_vals
    out = per_region[masked_ids]

    py, px = np.nonzero(masked_ids == 0)
    if len(px):
        flat = masked_ids.ravel()
        keep = flat > 0
        counts = np.bincount(flat[keep], minlength=len(per_region)).astype(np.float64)
        h, w = masked_ids.shape
        gx = np.tile(np.arange(w, dtype=np.float64) + 0.5, h)
        gy = np.repeat(np.arange(h, dtype=np.float64) + 0.5, w)
        rcx = np.bincount(flat[keep], weights=gx[keep], minlength=len(per_region))[retained_ids]
        rcy = np.bincount(flat[keep], weights=gy[keep], minlength=len(per_region))[retained_ids]
        rcx /= counts[retained_ids]
        rcy /= counts[retained_ids]
        # retained ids ascend after the sort above, so argmin's
        # first-minimum rule breaks ties toward the lower id
        chunk = max(1, 4_000_000 // max(1, len(retained_ids)))
        for lo in range(0, len(px), chunk):
            sl = slice(lo, lo + chunk)
            d2 = (px[sl, None] + 0.5 - rcx[None, :]) ** 2 + (py[sl, None] + 0.5 - rcy[None, :]) ** 2
            out[py[sl], px[sl]] = cell_vals[np.argmin(d2, axis=1)]
    return out


def expand_cell_values(
    values: np.ndarray, sp: Superpixelation, ga: GridAssignment
) -> np.ndarray:
    """Expand per-cell values to pixels through the superpixel map.

    Every pixel of a retained region receives its cell's value; pixels of
    discarded regions receive the value at the spatially nearest retained
    centroid. Works for label grids and score grids alike.
    """
    expected = (ga.spec.grid_height, ga.spec.grid_width)
    if values.shape != expected:
        raise DimensionMismatchError(f"cell grid shape {values.shape} != {expected}")
    retained = np.array(sorted(ga.assignments), dtype=np.int64)
    rows = np.array([ga.assignments[r][0] for r in retained], dtype=np.int64)
    cols = np.array([ga.assignments[r][1] for r in retained], dtype=np.int64)
    return expand_masked_map(values, masked_region_map(sp, ga), retained, rows, cols)


def rasterize_masked_map(
    mask_labels: np.ndarray,
    masked_ids: np.ndarray,
    retained_ids: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    spec: GridSpec,
) -> np.ndarray:
    """Majority-label rasterization working from a masked region raster.

    Same semantics as :func:`rasterize_labels` (pixels of discarded regions
    belong to no cell, so zeroing them out changes nothing); used by the
    file-based evaluation path where only the masked map survives.
    """
    if mask_labels.shape != masked_ids.shape:
        raise DimensionMismatchError(
            f"mask {mask_labels.shape} vs region map {masked_ids.shape}"
        )
    n_ids = int(masked_ids.max()) + 1
    n_labels = int(mask_labels.max()) + 1
    keep = masked_ids.ravel() > 0
    key = masked_ids.ravel()[keep].astype(np.int64) * n_labels + mask_labels.ravel()[keep]
    table = np.bincount(key, minlength=n_ids * n_labels).reshape(n_ids, n_labels)
    modal = table.argmax(axis=1)
    grid = np.full((spec.grid_height, spec.grid_width), EMPTY, dtype=np.int16)
    grid[rows, cols] = modal[retained_ids]
    return grid


def backproject(cells: CellLabelGrid, sg: Sigrid) -> Mask:
    """Expand cell labels back to a pixel mask (see :func:`expand_cell_values`).

    Every retained cell must carry a real label; EMPTY is only allowed on
    unassigned cells.
    """
    if cells.spec != sg.spec:
        raise DimensionMismatchError(f"cell grid {cells.spec} != sigrid grid {sg.spec}")
    for row, col in sg.cells:
        if cells.labels[row, col] == EMPTY:
            raise ValueError(f"retained cell ({row}, {col}) carries the EMPTY label")
    labels = expand_cell_values(
        cells.labels.astype(np.int32), sg.source_superpixelation, sg.assignment
    )
    return Mask(labels)


def _check_assignment(sp: Superpixelation, ga: GridAssignment) -> None:
    ids = set(ga.assignments) | set(ga.discarded)
    if len(ids) != sp.region_count or (ids and max(ids) > sp.region_count):
        raise ValueError(
            "assignment does not account for every region of the superpixelation "
            f"({len(ids)} accounted, {sp.region_count} regions)"
        )
