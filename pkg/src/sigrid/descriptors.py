"""Per-superpixel appearance and shape descriptors.

All channels are computed with accumulate-by-region passes (np.bincount
over the label raster) so the cost is a handful of full-image sweeps
regardless of the region count. The channel layout, in serialization
order, is

    [AC_r, AC_g, AC_b, A, W, H, C, S, E, Hu1..Hu7]

restricted to the channels enabled in :class:`DescriptorConfig`.

Shape channel definitions:

* A, W, H - pixel area and inclusive bounding-box extent, normalized by
  the image area / dimensions;
* C - isoperimetric quotient 4*pi*A / P^2 with P the number of exposed
  4-neighbor pixel edges (region boundary or image border), clamped to 1;
* S - solidity: pixel area over the convex-hull area of the pixel corner
  points, so 1-pixel-thick regions keep a well-defined hull;
* E - eccentricity sqrt(1 - l2/l1) of the region's covariance treating
  each pixel as a unit square (the square adds 1/12 per axis, which keeps
  E strictly below 1 and makes a single pixel exactly 0);
* Hu1..Hu7 - Hu's seven moment invariants of the binary region indicator,
  each compressed with a signed log: sign(p)*log10(1 + |p|*1e12)/12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .imaging import Image, Superpixelation

__all__ = [
    "DescriptorConfig",
    "CHANNEL_ORDER",
    "compute_descriptors",
    "compute_descriptor_matrix",
    "hu_moments_raw",
    "log_scale_hu",
    "convex_hull_area",
]

CHANNEL_ORDER = ("avg_color", "area", "width", "height", "compactness", "solidity", "eccentricity", "hu_moments")
_CHANNEL_WIDTHS = {"avg_color": 3, "hu_moments": 7}
_SHORT_NAMES = {"ac": "avg_color", "a": "area", "w": "width", "h": "height", "c": "compactness", "s": "solidity", "e": "eccentricity", "hu": "hu_moments"}


@dataclass(frozen=True)
class DescriptorConfig:
    """Which descriptor channels to compute. Default: color + Hu (d = 10)."""

    avg_color: bool = True
    area: bool = False
    width: bool = False
    height: bool = False
    compactness: bool = False
    solidity: bool = False
    eccentricity: bool = False
    hu_moments: bool = True

    def __post_init__(self):
        if not any(getattr(self, name) for name in CHANNEL_ORDER):
            raise ValueError("at least one descriptor channel must be enabled")

    @property
    def channels(self) -> int:
        return sum(_CHANNEL_WIDTHS.get(n, 1) for n in CHANNEL_ORDER if getattr(self, n))

    @property
    def bitmask(self) -> int:
        """Bit i set when CHANNEL_ORDER[i] is enabled (SGRD header field)."""
        return sum(1 << i for i, n in enumerate(CHANNEL_ORDER) if getattr(self, n))

    @classmethod
    def from_bitmask(cls, mask: int) -> "DescriptorConfig":
        return cls(**{n: bool(mask >> i & 1) for i, n in enumerate(CHANNEL_ORDER)})

    @classmethod
    def from_names(cls, spec: str) -> "DescriptorConfig":
        """Parse a comma list of short channel names, e.g. ``"ac,hu"``."""
        enabled = {}
        for tok in spec.split(","):
            tok = tok.strip().lower()
            if not tok:
                continue
            if tok not in _SHORT_NAMES:
                raise ValueError(f"unknown descriptor {tok!r} (choose from {sorted(_SHORT_NAMES)})")
            enabled[_SHORT_NAMES[tok]] = True
        return cls(**{n: enabled.get(n, False) for n in CHANNEL_ORDER})

    def names(self) -> str:
        short = {v: k for k, v in _SHORT_NAMES.items()}
        return ",".join(short[n] for n in CHANNEL_ORDER if getattr(self, n))


def log_scale_hu(phi: np.ndarray) -> np.ndarray:
    """Signed log compression for Hu values: raw invariants span ~30 orders
    of magnitude, which would not survive 32-bit serialization.

    Computes sign(p) * log10(1 + |p|*1e12) / 12 via log1p so sub-1e-16
    magnitudes keep their sign instead of rounding to zero.
    """
    return np.sign(phi) * np.log1p(np.abs(phi) * 1e12) / (12.0 * np.log(10.0))


def _hu_from_eta(eta20, eta02, eta11, eta30, eta21, eta12, eta03):
    """Hu's seven invariants from normalized central moments (vectorized)."""
    a = eta30 + eta12  # often written as the x-projection sum
    b = eta21 + eta03
    c = eta30 - 3.0 * eta12
    d = 3.0 * eta21 - eta03
    phi1 = eta20 + eta02
    phi2 = (eta20 - eta02) ** 2 + 4.0 * eta11**2
    phi3 = c**2 + d**2
    phi4 = a**2 + b**2
    phi5 = c * a * (a**2 - 3.0 * b**2) + d * b * (3.0 * a**2 - b**2)
    phi6 = (eta20 - eta02) * (a**2 - b**2) + 4.0 * eta11 * a * b
    phi7 = d * a * (a**2 - 3.0 * b**2) - c * b * (3.0 * a**2 - b**2)
    return np.stack([phi1, phi2, phi3, phi4, phi5, phi6, phi7])


def hu_moments_raw(pixels) -> np.ndarray:
    """Raw (unscaled) Hu invariants of a pixel point set.

    Input is a sequence of (x, y) integer coordinates; the invariants are
    computed from normalized central moments up to order 3. Exposed
    separately so invariance checks can bypass the log compression.
    """
    pts = np.asarray(pixels, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("empty pixel list")
    x = pts[:, 0] - pts[:, 0].mean()
    y = pts[:, 1] - pts[:, 1].mean()
    n = float(len(pts))

    def eta(p, q):
        return (x**p * y**q).sum() / n ** (1.0 + (p + q) / 2.0)

    return _hu_from_eta(eta(2, 0), eta(0, 2), eta(1, 1), eta(3, 0), eta(2, 1), eta(1, 2), eta(0, 3))


def convex_hull_area(points: np.ndarray) -> float:
    """Area of the convex hull of integer points via monotone chain +
    shoelace. Returns 0 for collinear input."""
    pts = np.unique(np.asarray(points, dtype=np.int64), axis=0)  # sorted lexicographically
    if len(pts) < 3:
        return 0.0

    def half(iterable):
        chain: list[np.ndarray] = []
        for p in iterable:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1], dtype=np.float64)
    if len(hull) < 3:
        return 0.0
    x, y = hull[:, 0], hull[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _boundary_mask(ids: np.ndarray) -> np.ndarray:
    """Pixels with at least one 4-neighbor in another region, or on the
    image border."""
    bnd = np.zeros(ids.shape, dtype=bool)
    diff_h = ids[:, :-1] != ids[:, 1:]
    diff_v = ids[:-1, :] != ids[1:, :]
    bnd[:, :-1] |= diff_h
    bnd[:, 1:] |= diff_h
    bnd[:-1, :] |= diff_v
    bnd[1:, :] |= diff_v
    bnd[0, :] = bnd[-1, :] = True
    bnd[:, 0] = bnd[:, -1] = True
    return bnd


def _perimeters(ids: np.ndarray, k: int) -> np.ndarray:
    """Exposed 4-neighbor edge count per region (0-based index)."""
    per = np.zeros(k, dtype=np.float64)
    diff_h = ids[:, :-1] != ids[:, 1:]
    per += np.bincount(ids[:, :-1][diff_h] - 1, minlength=k)
    per += np.bincount(ids[:, 1:][diff_h] - 1, minlength=k)
    diff_v = ids[:-1, :] != ids[1:, :]
    per += np.bincount(ids[:-1, :][diff_v] - 1, minlength=k)
    per += np.bincount(ids[1:, :][diff_v] - 1, minlength=k)
    for border in (ids[0, :], ids[-1, :], ids[:, 0], ids[:, -1]):
        per += np.bincount(border - 1, minlength=k)
    return per


def compute_descriptor_matrix(
    img: Image, sp: Superpixelation, cfg: DescriptorConfig
) -> np.ndarray:
    """Descriptors for all regions at once, shaped (region_count, d).

    Row i holds region id i+1. See the module docstring for channel
    definitions and ordering.
    """
    if (img.width, img.height) != (sp.width, sp.height):
        raise DimensionMismatchError(
            f"image {img.width}x{img.height} vs superpixelation {sp.width}x{sp.height}"
        )
    h, w = sp.height, sp.width
    ids2d = sp.region_ids
    idx0 = ids2d.ravel() - 1
    k = sp.region_count
    counts = np.bincount(idx0, minlength=k).astype(np.float64)

    xs = np.tile(np.arange(w, dtype=np.float64), h)
    ys = np.repeat(np.arange(h, dtype=np.float64), w)

    columns: list[np.ndarray] = []

    if cfg.avg_color:
        rgb = img.rgb()
        for ch in range(3):
            sums = np.bincount(idx0, weights=rgb[ch].ravel(), minlength=k)
            columns.append(sums / counts)

    if cfg.area:
        columns.append(counts / (w * h))

    if cfg.width or cfg.height:
        order = np.argsort(idx0, kind="stable")
        starts = np.searchsorted(idx0[order], np.arange(k))
        if cfg.width:
            xmin = np.minimum.reduceat(xs[order], starts)
            xmax = np.maximum.reduceat(xs[order], starts)
            columns.append((xmax - xmin + 1.0) / w)
        if cfg.height:
            ymin = np.minimum.reduceat(ys[order], starts)
            ymax = np.maximum.reduceat(ys[order], starts)
            columns.append((ymax - ymin + 1.0) / h)

    if cfg.compactness:
        per = _perimeters(ids2d, k)
        columns.append(np.minimum(4.0 * math.pi * counts / per**2, 1.0))

    if cfg.solidity:
        columns.append(_solidity(ids2d, counts, k))

    need_central = cfg.eccentricity or cfg.hu_moments
    if need_central:
        mean_x = np.bincount(idx0, weights=xs, minlength=k) / counts
        mean_y = np.bincount(idx0, weights=ys, minlength=k) / counts
        dx = xs - mean_x[idx0]
        dy = ys - mean_y[idx0]

    if cfg.eccentricity:
        var_x = np.bincount(idx0, weights=dx * dx, minlength=k) / counts + 1.0 / 12.0
        var_y = np.bincount(idx0, weights=dy * dy, minlength=k) / counts + 1.0 / 12.0
        cov = np.bincount(idx0, weights=dx * dy, minlength=k) / counts
        half_trace = (var_x + var_y) / 2.0
        root = np.sqrt(np.maximum(((var_x - var_y) / 2.0) ** 2 + cov**2, 0.0))
        lam1 = half_trace + root
        lam2 = half_trace - root
        columns.append(np.sqrt(np.maximum(1.0 - lam2 / lam1, 0.0)))

    if cfg.hu_moments:
        def mu(p, q):
            return np.bincount(idx0, weights=dx**p * dy**q, minlength=k)

        def eta(p, q):
            return mu(p, q) / counts ** (1.0 + (p + q) / 2.0)

        phi = _hu_from_eta(eta(2, 0), eta(0, 2), eta(1, 1), eta(3, 0), eta(2, 1), eta(1, 2), eta(0, 3))
        columns.extend(log_scale_hu(phi))

    return np.stack(columns, axis=1)


def _solidity(ids2d: np.ndarray, counts: np.ndarray, k: int) -> np.ndarray:
    """Pixel area over convex-hull area of pixel corner points.

    The hull only needs the boundary pixels of each region: every corner of
    an interior pixel is also a corner of a pixel nearer the boundary.
    """
    h, w = ids2d.shape
    bnd = _boundary_mask(ids2d)
    by, bx = np.nonzero(bnd)
    bidx = ids2d[by, bx] - 1
    order = np.argsort(bidx, kind="stable")
    bx, by, bidx = bx[order], by[order], bidx[order]
    starts = np.searchsorted(bidx, np.arange(k + 1))

    out = np.empty(k, dtype=np.float64)
    for r in range(k):
        px = bx[starts[r] : starts[r + 1]]
        py = by[starts[r] : starts[r + 1]]
        corners = np.stack(
            [
                np.concatenate([px, px + 1, px, px + 1]),
                np.concatenate([py, py, py + 1, py + 1]),
            ],
            axis=1,
        )
        hull = convex_hull_area(corners)
        out[r] = min(counts[r] / hull, 1.0) if hull > 0 else 1.0
    return out


def compute_descriptors(
    img: Image, sp: Superpixelation, cfg: DescriptorConfig
) -> dict[int, np.ndarray]:
    """Descriptor vector per region id (1-based)."""
    matrix = compute_descriptor_matrix(img, sp, cfg)
    return {rid: matrix[rid - 1] for rid in range(1, sp.region_count + 1)}
