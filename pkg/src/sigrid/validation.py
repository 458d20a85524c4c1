"""Input coercion and validation helpers for the estimator-style API."""

from __future__ import annotations

import os

import numpy as np

from .errors import DimensionMismatchError, ImageFormatError
from .imaging import Image, Mask, load_image, load_mask

__all__ = ["as_image", "as_mask", "check_paired"]


def as_image(x) -> Image:
    """Coerce a path, ndarray, or Image into an Image.

    Arrays may be (h, w) gray, (h, w, 3) channel-last, or (1|3, h, w)
    channel-first; uint8 arrays are scaled by 1/255, floats must already
    sit in [0, 1].
    """
    if isinstance(x, Image):
        return x
    if isinstance(x, (str, os.PathLike)):
        return load_image(x)
    arr = np.asarray(x)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    if arr.ndim == 2:
        return Image(arr[None])
    if arr.ndim == 3:
        if arr.shape[2] in (1, 3):  # channel-last (PIL convention) wins ambiguity
            return Image(arr.transpose(2, 0, 1))
        if arr.shape[0] in (1, 3):
            return Image(arr)
    raise ImageFormatError(f"cannot interpret array of shape {arr.shape} as an image")


def as_mask(x, like: Image | None = None) -> Mask:
    """Coerce a path or array into a Mask, optionally checking dimensions."""
    if isinstance(x, Mask):
        mask = x
    elif isinstance(x, (str, os.PathLike)):
        mask = load_mask(x)
    else:
        arr = np.asarray(x)
        if arr.ndim != 2:
            raise ImageFormatError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.dtype == bool:
            arr = arr.astype(np.int32)
        mask = Mask(arr)
    if like is not None:
        check_paired(like, mask)
    return mask


def check_paired(img: Image, mask: Mask) -> None:
    if (img.width, img.height) != (mask.width, mask.height):
        raise DimensionMismatchError(
            f"image {img.width}x{img.height} vs mask {mask.width}x{mask.height}"
        )
