"""SLIC superpixel segmentation (CPU, deterministic).

Localized k-means in combined CIELAB + position space. The distance between
a pixel p and a cluster center c is

    D = sqrt(d_lab^2 + (d_xy / s)^2 * m^2)

with ``s = sqrt(w*h / K)`` the nominal sampling step and ``m`` the
compactness weight. Each center only competes for pixels inside a 2s x 2s
box around its current position; ties in the assignment break toward the
lower center id, so results are reproducible bit-for-bit regardless of how
the per-center work is scheduled.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .imaging import Image, Superpixelation, compact_ids, srgb_to_lab
from .unionfind import UnionFind

__all__ = ["SlicParams", "slic_segment", "superpixel_centroids"]


@dataclass(frozen=True)
class SlicParams:
    """Settings for :func:`slic_segment`.

    ``segments`` is a target, not a promise: the realized region count moves
    with connectivity enforcement and with how well a regular grid can
    approximate the requested K.
    """

    segments: int = 1500
    compactness: float = 20.0
    max_iterations: int = 10
    enforce_connectivity: bool = True

    def __post_init__(self):
        if self.segments < 1:
            raise ValueError(f"segments must be >= 1, got {self.segments}")
        if not self.compactness > 0:
            raise ValueError(f"compactness must be > 0, got {self.compactness}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


def _initial_centers(w: int, h: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Lay out ~k centers on a regular grid matching the image aspect ratio.

    Returns float (cx, cy) arrays in pixel-index space, row-major order.
    An exact step of s = sqrt(w*h/k) cannot realize every k (e.g. k=2 on a
    square image), so the grid uses nx*ny ~ k with per-axis steps w/nx, h/ny
    that stay close to s.
    """
    ny = max(1, round(math.sqrt(k * h / w)))
    nx = max(1, round(k / ny))
    cx = (np.arange(nx) + 0.5) * (w / nx) - 0.5
    cy = (np.arange(ny) + 0.5) * (h / ny) - 0.5
    gx, gy = np.meshgrid(cx, cy)
    return gx.ravel(), gy.ravel()


def _gradient_map(lab: np.ndarray) -> np.ndarray:
    """Squared Lab gradient magnitude per pixel, edge-replicated at borders."""
    padded = np.pad(lab, ((0, 0), (1, 1), (1, 1)), mode="edge")
    dx = padded[:, 1:-1, 2:] - padded[:, 1:-1, :-2]
    dy = padded[:, 2:, 1:-1] - padded[:, :-2, 1:-1]
    return (dx**2).sum(axis=0) + (dy**2).sum(axis=0)


def _perturb_centers(cx, cy, grad):
    """Move each center to the lowest-gradient pixel in its 3x3 neighborhood.

    Ties pick the first candidate in row-major neighborhood order.
    """
    h, w = grad.shape
    px = np.clip(np.rint(cx).astype(int), 0, w - 1)
    py = np.clip(np.rint(cy).astype(int), 0, h - 1)
    best_x, best_y = px.copy(), py.copy()
    best_g = np.full(px.shape, np.inf)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            nx = px + dx
            ny = py + dy
            ok = (nx >= 0) & (nx < w) & (ny >= 0) & (ny < h)
            g = np.where(ok, grad[np.clip(ny, 0, h - 1), np.clip(nx, 0, w - 1)], np.inf)
            better = g < best_g
            best_g = np.where(better, g, best_g)
            best_x = np.where(better, nx, best_x)
            best_y = np.where(better, ny, best_y)
    return best_x.astype(float), best_y.astype(float)


def slic_segment(img: Image, params: SlicParams) -> Superpixelation:
    """Segment ``img`` into ~``params.segments`` superpixels.

    Deterministic for fixed inputs. Raises ValueError when the requested
    segment count exceeds the pixel count.
    """
    h, w = img.height, img.width
    k = params.segments
    if k > w * h:
        raise ValueError(f"segments={k} exceeds pixel count {w * h}")

    lab = srgb_to_lab(img)
    s = math.sqrt(w * h / k)
    inv_ratio2 = (params.compactness / s) ** 2

    cx, cy = _initial_centers(w, h, k)
    cx, cy = _perturb_centers(cx, cy, _gradient_map(lab))
    clab = lab[:, cy.astype(int), cx.astype(int)].T.copy()  # (n_centers, 3)
    n_centers = len(cx)

    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    all_x = np.tile(xs, h)
    all_y = np.repeat(ys, w)
    dist = np.empty((h, w))
    label = np.empty((h, w), dtype=np.int32)

    for _ in range(params.max_iterations):
        dist.fill(np.inf)
        label.fill(-1)
        for ci in range(n_centers):
            x0 = max(0, math.ceil(cx[ci] - s))
            x1 = min(w - 1, math.floor(cx[ci] + s))
            y0 = max(0, math.ceil(cy[ci] - s))
            y1 = min(h - 1, math.floor(cy[ci] + s))
            if x0 > x1 or y0 > y1:
                continue
            win = lab[:, y0 : y1 + 1, x0 : x1 + 1]
            dlab2 = (
                (win[0] - clab[ci, 0]) ** 2
                + (win[1] - clab[ci, 1]) ** 2
                + (win[2] - clab[ci, 2]) ** 2
            )
            dxy2 = (xs[x0 : x1 + 1] - cx[ci]) ** 2 + (ys[y0 : y1 + 1, None] - cy[ci]) ** 2
            d2 = dlab2 + dxy2 * inv_ratio2
            dwin = dist[y0 : y1 + 1, x0 : x1 + 1]
            lwin = label[y0 : y1 + 1, x0 : x1 + 1]
            closer = d2 < dwin  # strict: ties keep the earlier (lower) center id
            dwin[closer] = d2[closer]
            lwin[closer] = ci

        flat = label.ravel()
        assigned = flat >= 0
        ids = flat[assigned]
        counts = np.bincount(ids, minlength=n_centers).astype(np.float64)
        sum_x = np.bincount(ids, weights=all_x[assigned], minlength=n_centers)
        sum_y = np.bincount(ids, weights=all_y[assigned], minlength=n_centers)
        nonzero = counts > 0
        denom = np.maximum(counts, 1.0)
        cx = np.where(nonzero, sum_x / denom, cx)
        cy = np.where(nonzero, sum_y / denom, cy)
        for ch in range(3):
            sums = np.bincount(ids, weights=lab[ch].ravel()[assigned], minlength=n_centers)
            clab[:, ch] = np.where(nonzero, sums / denom, clab[:, ch])

    if (label < 0).any():
        # pixels never covered by any window (extreme aspect ratios): fall
        # back to the spatially nearest center, ties toward the lower id
        miss_y, miss_x = np.nonzero(label < 0)
        d2 = (miss_x[:, None] - cx[None, :]) ** 2 + (miss_y[:, None] - cy[None, :]) ** 2
        label[miss_y, miss_x] = np.argmin(d2, axis=1)

    if params.enforce_connectivity:
        label = _enforce_connectivity(label, threshold=s * s / 4.0)

    ids, count = compact_ids(label)
    return Superpixelation(ids, count)


def _components(label: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected components of equal-label runs, ids compacted row-major."""
    h, w = label.shape
    idx = np.arange(h * w).reshape(h, w)
    pairs_a, pairs_b = [], []
    same = label[:, :-1] == label[:, 1:]
    pairs_a.append(idx[:, :-1][same])
    pairs_b.append(idx[:, 1:][same])
    same = label[:-1, :] == label[1:, :]
    pairs_a.append(idx[:-1, :][same])
    pairs_b.append(idx[1:, :][same])
    a = np.concatenate(pairs_a)
    b = np.concatenate(pairs_b)
    graph = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(h * w, h * w))
    _, comp = connected_components(graph, directed=False)
    comp, n = compact_ids(comp.reshape(h, w))
    return comp - 1, n  # back to 0-based component indices


def _adjacency(comp: np.ndarray, n: int) -> list[set[int]]:
    """Component adjacency sets from 4-neighbor boundaries."""
    adj: list[set[int]] = [set() for _ in range(n)]
    for ca, cb in ((comp[:, :-1], comp[:, 1:]), (comp[:-1, :], comp[1:, :])):
        diff = ca != cb
        if not diff.any():
            continue
        lo = np.minimum(ca[diff], cb[diff]).astype(np.int64)
        hi = np.maximum(ca[diff], cb[diff]).astype(np.int64)
        for key in np.unique(lo * n + hi):
            a, b = int(key // n), int(key % n)
            adj[a].add(b)
            adj[b].add(a)
    return adj


def _enforce_connectivity(label: np.ndarray, threshold: float) -> np.ndarray:
    """Split disconnected assignments, then absorb orphan components.

    Every 4-connected component becomes its own region; components smaller
    than ``threshold`` pixels are merged into their largest adjacent region,
    repeatedly, until none remains below the threshold (or a component has
    no neighbor at all). Selection order is deterministic: smallest
    component first, ties toward the lower component id; the target is the
    largest current neighbor, ties again toward the lower id.
    """
    comp, n = _components(label)
    sizes = np.bincount(comp.ravel(), minlength=n)
    adj = _adjacency(comp, n)

    uf = UnionFind(n)
    size = {i: int(sizes[i]) for i in range(n)}
    heap = [(size[i], i) for i in range(n) if size[i] < threshold]
    heapq.heapify(heap)
    while heap:
        sz, r = heapq.heappop(heap)
        if r not in size or size[r] != sz or not adj[r]:
            continue
        target = max(adj[r], key=lambda nb: (size[nb], -nb))
        merged = sz + size[target]
        survivor = uf.union(r, target)
        dead = target if survivor == r else r
        for nb in adj[dead]:
            adj[nb].discard(dead)
            if nb != survivor:
                adj[nb].add(survivor)
                adj[survivor].add(nb)
        adj[survivor] |= adj[dead]
        adj[survivor].discard(survivor)
        adj[survivor].discard(dead)
        adj[dead] = set()
        size[survivor] = merged
        del size[dead]
        if merged < threshold:
            heapq.heappush(heap, (merged, survivor))

    roots = uf.roots()
    return roots[comp].astype(np.int32)


def superpixel_centroids(sp: Superpixelation) -> dict[int, tuple[float, float]]:
    """Arithmetic mean of member pixel centers per region.

    Pixel (x, y) has its center at (x + 0.5, y + 0.5), so a region made of
    the single pixel (3, 4) sits at (3.5, 4.5).
    """
    cx, cy = _centroid_arrays(sp)
    return {rid: (float(cx[rid]), float(cy[rid])) for rid in range(1, sp.region_count + 1)}


def _centroid_arrays(sp: Superpixelation) -> tuple[np.ndarray, np.ndarray]:
    """Centroid (x, y) per region id; index 0 is unused padding."""
    h, w = sp.region_ids.shape
    flat = sp.region_ids.ravel()
    counts = np.bincount(flat, minlength=sp.region_count + 1).astype(np.float64)
    gx = np.tile(np.arange(w, dtype=np.float64) + 0.5, h)
    gy = np.repeat(np.arange(h, dtype=np.float64) + 0.5, w)
    sum_x = np.bincount(flat, weights=gx, minlength=sp.region_count + 1)
    sum_y = np.bincount(flat, weights=gy, minlength=sp.region_count + 1)
    counts[0] = 1.0
    return sum_x / counts, sum_y / counts
