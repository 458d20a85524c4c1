"""Core raster types (images, masks, superpixel label maps) and file ingestion.

Conventions used everywhere in this package:

* pixel coordinates are ``(x, y)`` with ``x`` = column, ``y`` = row, origin at
  the top-left corner;
* image samples live in the unit interval (8-bit input is divided by 255);
* superpixel region ids are 1-based and contiguous (``1..K``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import DimensionMismatchError, ImageFormatError

__all__ = [
    "Image",
    "Mask",
    "Superpixelation",
    "load_image",
    "load_mask",
    "save_mask",
    "compact_ids",
    "relabel_compact",
    "region_pixel_lists",
    "srgb_to_lab",
]


@dataclass(frozen=True)
class Image:
    """Dense raster with ``data`` shaped ``(channels, height, width)``.

    Samples are float64 in ``[0, 1]``; only 1- and 3-channel images are
    supported. Instances are immutable (the array is marked read-only) and
    safe to share between threads.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ImageFormatError(f"expected (c, h, w) array, got shape {data.shape}")
        c, h, w = data.shape
        if c not in (1, 3):
            raise ImageFormatError(f"unsupported channel count {c} (must be 1 or 3)")
        if h < 1 or w < 1:
            raise ImageFormatError(f"degenerate image dimensions {w}x{h}")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise ImageFormatError("sample values must lie in [0, 1]")
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def rgb(self) -> np.ndarray:
        """Return an (3, h, w) view; grayscale images replicate their channel."""
        if self.channels == 3:
            return self.data
        return np.broadcast_to(self.data, (3,) + self.data.shape[1:])


@dataclass(frozen=True)
class Mask:
    """Per-pixel non-negative class labels, shaped ``(height, width)``.

    Binary tasks use labels ``{0, 1}``.
    """

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ImageFormatError(f"expected (h, w) label array, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ImageFormatError(f"mask labels must be integers, got {labels.dtype}")
        if labels.size and labels.min() < 0:
            raise ImageFormatError("mask labels must be non-negative")
        labels = np.ascontiguousarray(labels.astype(np.int32, copy=False))
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class Superpixelation:
    """Partition of the pixel grid into regions ``1..region_count``.

    ``region_ids`` is an ``(h, w)`` int32 array. Every id in the range must
    occur at least once; constructors that may leave gaps should go through
    :func:`relabel_compact`. Regions produced by the segmenter are
    4-connected once connectivity enforcement has run; regions produced by
    centroid merging may be unions of several connected blobs.
    """

    region_ids: np.ndarray
    region_count: int

    def __post_init__(self):
        ids = np.asarray(self.region_ids)
        if ids.ndim != 2:
            raise ValueError(f"expected (h, w) id array, got shape {ids.shape}")
        if not np.issubdtype(ids.dtype, np.integer):
            raise ValueError(f"region ids must be integers, got {ids.dtype}")
        ids = np.ascontiguousarray(ids.astype(np.int32, copy=False))
        counts = np.bincount(ids.ravel(), minlength=self.region_count + 1)
        if ids.min() < 1 or ids.max() > self.region_count:
            raise ValueError(
                f"region ids must lie in 1..{self.region_count}, "
                f"found range {ids.min()}..{ids.max()}"
            )
        if (counts[1:] == 0).any():
            missing = int(np.nonzero(counts[1:] == 0)[0][0]) + 1
            raise ValueError(f"region id {missing} has no pixels (ids must be compact)")
        ids.setflags(write=False)
        object.__setattr__(self, "region_ids", ids)

    @property
    def height(self) -> int:
        return self.region_ids.shape[0]

    @property
    def width(self) -> int:
        return self.region_ids.shape[1]

    def region_sizes(self) -> np.ndarray:
        """Pixel count per region, index 0 unused (regions are 1-based)."""
        return np.bincount(self.region_ids.ravel(), minlength=self.region_count + 1)


def load_image(path) -> Image:
    """Read an 8-bit PNG or binary PPM/PGM file into a unit-interval Image.

    Palette PNGs are expanded to RGB. Alpha channels and 16-bit samples are
    rejected; this keeps ingestion bit-exactly testable.
    """
    try:
        with PILImage.open(path) as img:
            img.load()
            mode = img.mode
            if mode == "P":
                img = img.convert("RGB")
                mode = "RGB"
            if mode not in ("L", "RGB"):
                raise ImageFormatError(
                    f"{path}: unsupported pixel mode {mode!r} (only 8-bit L/RGB)"
                )
            arr = np.asarray(img, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except ImageFormatError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageFormatError(f"{path}: corrupt or unreadable image ({exc})") from exc
    if arr.ndim == 2:
        arr = arr[None, :, :]
    else:
        arr = arr.transpose(2, 0, 1)
    return Image(arr.astype(np.float64) / 255.0)


def load_mask(path) -> Mask:
    """Read a mask file: any nonzero sample becomes label 1."""
    img = load_image(path)
    gray = img.data[0] if img.channels == 1 else img.data.max(axis=0)
    return Mask((gray > 0).astype(np.int32))


def save_mask(path, mask: Mask) -> None:
    """Write a binary mask as an 8-bit grayscale PNG (labels > 0 become 255)."""
    arr = np.where(mask.labels > 0, 255, 0).astype(np.uint8)
    PILImage.fromarray(arr, mode="L").save(path, format="PNG")


def compact_ids(raw: np.ndarray) -> tuple[np.ndarray, int]:
    """Map arbitrary integer labels onto ``1..K'``, ordered by first
    row-major occurrence. Returns the relabeled array and K'."""
    flat = raw.ravel()
    uniq, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(uniq), dtype=np.int32)
    rank[order] = np.arange(1, len(uniq) + 1, dtype=np.int32)
    return rank[inverse].reshape(raw.shape), int(len(uniq))


def relabel_compact(sp: Superpixelation) -> Superpixelation:
    """Remap region ids onto ``1..K'`` without gaps.

    The remapping is order-preserving on first pixel occurrence in a
    row-major scan, so it is deterministic and idempotent.
    """
    ids, count = compact_ids(sp.region_ids)
    return Superpixelation(ids, count)


def region_pixel_lists(sp: Superpixelation) -> dict[int, list[tuple[int, int]]]:
    """Group pixel coordinates by region id.

    Returns ``{region_id: [(x, y), ...]}`` with each list in row-major order.
    The union of all lists covers every pixel exactly once. Intended for
    oracles and small-scale inspection; the hot paths use bincount-style
    accumulation instead.
    """
    h, w = sp.region_ids.shape
    flat = sp.region_ids.ravel()
    order = np.argsort(flat, kind="stable")  # stable keeps row-major order per id
    xs = (order % w).astype(int)
    ys = (order // w).astype(int)
    sizes = np.bincount(flat, minlength=sp.region_count + 1)[1:]
    out: dict[int, list[tuple[int, int]]] = {}
    start = 0
    for rid, size in enumerate(sizes, start=1):
        stop = start + int(size)
        out[rid] = list(zip(xs[start:stop].tolist(), ys[start:stop].tolist()))
        start = stop
    return out


# sRGB (D65) -> CIELAB. Matrix follows IEC 61966-2-1; the white point is
# taken as the matrix row sums so neutral grays map exactly onto the L axis.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = _SRGB_TO_XYZ.sum(axis=1)


def srgb_to_lab(img: Image) -> np.ndarray:
    """Convert unit-interval sRGB planes to CIELAB, returned as (3, h, w).

    Grayscale input is treated as r = g = b, which lands on the L axis
    (a = b = 0).
    """
    rgb = img.rgb()
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = np.einsum("ij,jhw->ihw", _SRGB_TO_XYZ, linear)
    xyz = xyz / _D65_WHITE[:, None, None]
    eps = (6.0 / 29.0) ** 3
    f = np.where(xyz > eps, np.cbrt(xyz), xyz / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[0] = 116.0 * f[1] - 16.0
    lab[1] = 500.0 * (f[0] - f[1])
    lab[2] = 200.0 * (f[1] - f[2])
    return lab


def check_same_shape(a, b, what: str = "rasters") -> None:
    """Raise DimensionMismatchError unless the two rasters agree on (w, h)."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatchError(
            f"{what} differ in size: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
