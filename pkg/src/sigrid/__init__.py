"""Sparse superpixel-descriptor grids for segmentation.

The pipeline: SLIC superpixels -> centroid merging and cell assignment ->
per-region color/shape descriptors -> a sparse d x h' x w' grid that
standard convolutional models consume directly. Labels travel the same way
(majority rasterization onto cells) and predictions come back through
back-projection. :class:`SigridEncoder` wraps the whole thing in a
scikit-learn style transformer; the ``sigrid`` CLI handles batch encoding,
evaluation, and the SGRD on-disk format.
"""

from .assembly import EMPTY, CellLabelGrid, Sigrid, backproject, build_sigrid, rasterize_labels
from .descriptors import DescriptorConfig, compute_descriptors, hu_moments_raw
from .errors import (
    DimensionMismatchError,
    FileFormatError,
    ImageFormatError,
    SigridError,
)
from .estimator import SigridEncoder
from .gridmap import (
    GridAssignment,
    GridSpec,
    assign_cells,
    map_to_grid,
    merge_close_centroids,
    min_collision_free_grid,
)
from .imaging import (
    Image,
    Mask,
    Superpixelation,
    load_image,
    load_mask,
    region_pixel_lists,
    relabel_compact,
    save_mask,
)
from .metrics import MetricsReport, evaluate, iou, max_f_beta, max_iou
from .slic import SlicParams, slic_segment, superpixel_centroids

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "CellLabelGrid",
    "DescriptorConfig",
    "DimensionMismatchError",
    "FileFormatError",
    "GridAssignment",
    "GridSpec",
    "Image",
    "ImageFormatError",
    "Mask",
    "MetricsReport",
    "Sigrid",
    "SigridEncoder",
    "SigridError",
    "SlicParams",
    "Superpixelation",
    "assign_cells",
    "backproject",
    "build_sigrid",
    "compute_descriptors",
    "evaluate",
    "hu_moments_raw",
    "iou",
    "load_image",
    "load_mask",
    "map_to_grid",
    "max_f_beta",
    "max_iou",
    "merge_close_centroids",
    "min_collision_free_grid",
    "rasterize_labels",
    "region_pixel_lists",
    "relabel_compact",
    "save_mask",
    "slic_segment",
    "superpixel_centroids",
]
