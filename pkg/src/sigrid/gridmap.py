"""Mapping superpixels onto a fixed cell grid.

Two regions can end up contending for one cell. Two mechanisms deal with
that, in order:

1. transitive merging of regions whose centroids sit closer than
   tau = max(h, w) / n  (n = the larger grid dimension), which collapses
   tightly clustered centers into one region before any cell is assigned;
2. collision discard: if several regions still land in the same cell, only
   the one with the largest pixel area keeps it.

Merging runs once, not to a fixpoint: recomputed centroids of merged groups
may again fall within tau of a neighbor, and those pairs are left alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import Superpixelation, compact_ids
from .slic import _centroid_arrays
from .unionfind import UnionFind

__all__ = [
    "GridSpec",
    "GridAssignment",
    "merge_threshold",
    "merge_close_centroids",
    "assign_cells",
    "map_to_grid",
    "min_collision_free_grid",
]


@dataclass(frozen=True)
class GridSpec:
    """Cell grid dimensions (columns x rows)."""

    grid_width: int = 80
    grid_height: int = 80

    def __post_init__(self):
        if self.grid_width < 1 or self.grid_height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.grid_width}x{self.grid_height}")

    @property
    def cells(self) -> int:
        return self.grid_width * self.grid_height


@dataclass(frozen=True)
class GridAssignment:
    """Outcome of placing region centroids into grid cells.

    ``assignments`` maps every retained region id to its (row, col) cell.
    ``merged_groups`` records which pre-merge ids were collapsed by the
    centroid-distance rule (empty when the assignment was computed on an
    already-merged map without provenance). ``discarded`` lists regions
    removed because a larger region claimed their cell;
    ``collision_rate`` is |discarded| / (region count after merging).
    """

    spec: GridSpec
    assignments: dict[int, tuple[int, int]]
    merged_groups: tuple[frozenset[int], ...] = ()
    discarded: tuple[int, ...] = ()
    collision_rate: float = 0.0

    def __post_init__(self):
        cells = list(self.assignments.values())
        if len(set(cells)) != len(cells):
            raise ValueError("two retained regions map to the same cell")
        overlap = set(self.assignments) & set(self.discarded)
        if overlap:
            raise ValueError(f"regions both assigned and discarded: {sorted(overlap)}")
        for row, col in cells:
            if not (0 <= row < self.spec.grid_height and 0 <= col < self.spec.grid_width):
                raise ValueError(f"cell ({row}, {col}) outside {self.spec}")
        if not 0.0 <= self.collision_rate <= 1.0:
            raise ValueError(f"collision_rate out of [0,1]: {self.collision_rate}")

    @property
    def retained_count(self) -> int:
        return len(self.assignments)

    def cell_of(self, region_id: int) -> tuple[int, int]:
        return self.assignments[region_id]


def merge_threshold(width: int, height: int, spec: GridSpec) -> float:
    """Centroid-distance threshold tau = max(h, w) / n, n = max grid dim."""
    return max(height, width) / max(spec.grid_width, spec.grid_height)


def _close_groups(sp: Superpixelation, tau: float) -> tuple[np.ndarray, list[frozenset[int]]]:
    """Union regions whose centroids are closer than tau, transitively.

    Returns (root id per region, groups of size >= 2). Index 0 of the root
    array is padding.
    """
    cx, cy = _centroid_arrays(sp)
    k = sp.region_count
    uf = UnionFind(k + 1)
    # pairwise centroid distances; K is a few thousand at most, so the dense
    # K x K comparison is cheap and simple
    d2 = (cx[1:, None] - cx[None, 1:]) ** 2 + (cy[1:, None] - cy[None, 1:]) ** 2
    close = np.triu(d2 < tau * tau, k=1)
    for a, b in zip(*np.nonzero(close)):
        uf.union(int(a) + 1, int(b) + 1)
    roots = uf.roots()
    groups: dict[int, list[int]] = {}
    for rid in range(1, k + 1):
        groups.setdefault(int(roots[rid]), []).append(rid)
    merged = [frozenset(g) for g in groups.values() if len(g) > 1]
    return roots, merged


def merge_close_centroids(sp: Superpixelation, spec: GridSpec) -> Superpixelation:
    """Collapse regions with near-coincident centroids into single regions.

    Applied once (no fixpoint); the result is compactly relabeled, and
    merged regions may be disconnected unions of the original blobs.
    """
    tau = merge_threshold(sp.width, sp.height, spec)
    roots, _ = _close_groups(sp, tau)
    ids, count = compact_ids(roots[sp.region_ids])
    return Superpixelation(ids, count)


def assign_cells(
    sp: Superpixelation,
    spec: GridSpec,
    merged_groups: tuple[frozenset[int], ...] = (),
) -> GridAssignment:
    """Place each region's centroid into a cell, discarding collision losers.

    The cell is (floor(cy * h'/h), floor(cx * w'/w)), clamped at the
    right/bottom edge. When several regions land in one cell the largest
    pixel area wins; ties break toward the lower region id. Callers are
    expected to pass a tau-merged map (see :func:`map_to_grid`).
    """
    h, w = sp.height, sp.width
    cx, cy = _centroid_arrays(sp)
    k = sp.region_count
    rows = np.minimum((cy[1:] * spec.grid_height / h).astype(np.int64), spec.grid_height - 1)
    cols = np.minimum((cx[1:] * spec.grid_width / w).astype(np.int64), spec.grid_width - 1)
    areas = sp.region_sizes()[1:]
    ids = np.arange(1, k + 1)

    cell_keys = rows * spec.grid_width + cols
    order = np.lexsort((ids, -areas, cell_keys))
    sorted_keys = cell_keys[order]
    first = np.ones(k, dtype=bool)
    first[1:] = sorted_keys[1:] != sorted_keys[:-1]

    winners = ids[order][first]
    losers = ids[order][~first]
    assignments = {
        int(rid): (int(rows[rid - 1]), int(cols[rid - 1])) for rid in np.sort(winners)
    }
    discarded = tuple(int(r) for r in np.sort(losers))
    return GridAssignment(
        spec=spec,
        assignments=assignments,
        merged_groups=merged_groups,
        discarded=discarded,
        collision_rate=len(discarded) / k,
    )


def map_to_grid(sp: Superpixelation, spec: GridSpec) -> tuple[Superpixelation, GridAssignment]:
    """Full grid mapping: tau-merge, then cell assignment with provenance.

    Returns the merged superpixelation and its assignment; the assignment's
    ``merged_groups`` holds the pre-merge region ids that were collapsed.
    """
    tau = merge_threshold(sp.width, sp.height, spec)
    roots, groups = _close_groups(sp, tau)
    ids, count = compact_ids(roots[sp.region_ids])
    merged = Superpixelation(ids, count)
    return merged, assign_cells(merged, spec, merged_groups=tuple(groups))


def min_collision_free_grid(sp: Superpixelation, max_cells: int) -> GridSpec:
    """Smallest square grid on which no two centroids share a cell.

    Linear scan starting at n = ceil(sqrt(K)); returns a max_cells x
    max_cells spec when even that grid cannot separate the centroids (the
    collisions then surface downstream via the discard rule). No tau-merge
    is applied here.
    """
    h, w = sp.height, sp.width
    cx, cy = _centroid_arrays(sp)
    k = sp.region_count
    start = max(1, int(np.ceil(np.sqrt(k))))
    for n in range(start, max_cells + 1):
        rows = np.minimum((cy[1:] * n / h).astype(np.int64), n - 1)
        cols = np.minimum((cx[1:] * n / w).astype(np.int64), n - 1)
        if len(np.unique(rows * n + cols)) == k:
            return GridSpec(n, n)
    return GridSpec(max_cells, max_cells)
