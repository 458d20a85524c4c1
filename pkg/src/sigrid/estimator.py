"""Scikit-learn style front end for the encoding pipeline.

``SigridEncoder`` is a stateless transformer: ``fit`` only validates the
hyperparameters, ``transform`` turns images into sparse descriptor grids,
and ``inverse_transform`` expands cell labels back to pixel masks. Because
it subclasses ``BaseEstimator`` it picks up ``get_params``/``set_params``
and composes with pipelines and searches from the wider ecosystem.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .assembly import CellLabelGrid, Sigrid, backproject, build_sigrid, rasterize_labels
from .descriptors import DescriptorConfig
from .gridmap import GridSpec, map_to_grid, min_collision_free_grid
from .imaging import Image, Mask
from .metrics import MetricsReport, evaluate
from .slic import SlicParams, slic_segment
from .validation import as_image, as_mask, check_paired

__all__ = ["SigridEncoder"]


class SigridEncoder(BaseEstimator, TransformerMixin):
    """Encode images as sparse superpixel-descriptor grids.

    Parameters
    ----------
    segments : target SLIC superpixel count.
    compactness : SLIC color/space balance weight.
    max_iterations : SLIC k-means sweeps.
    grid_size : cell grid resolution; an int for square grids or a
        ``(width, height)`` pair.
    auto_grid : pick the smallest collision-free square grid per image
        instead of the fixed ``grid_size``.
    max_cells : upper bound for the auto-grid search.
    descriptors : comma list of channel names (``"ac,a,w,h,c,s,e,hu"``)
        or a :class:`DescriptorConfig`.
    """

    def __init__(
        self,
        segments: int = 1500,
        compactness: float = 20.0,
        max_iterations: int = 10,
        grid_size=80,
        auto_grid: bool = False,
        max_cells: int = 256,
        descriptors="ac,hu",
    ):
        self.segments = segments
        self.compactness = compactness
        self.max_iterations = max_iterations
        self.grid_size = grid_size
        self.auto_grid = auto_grid
        self.max_cells = max_cells
        self.descriptors = descriptors

    # -- parameter resolution -------------------------------------------

    def _slic_params(self) -> SlicParams:
        return SlicParams(
            segments=self.segments,
            compactness=self.compactness,
            max_iterations=self.max_iterations,
        )

    def _grid_spec(self) -> GridSpec:
        if isinstance(self.grid_size, int):
            return GridSpec(self.grid_size, self.grid_size)
        w, h = self.grid_size
        return GridSpec(int(w), int(h))

    def _descriptor_config(self) -> DescriptorConfig:
        if isinstance(self.descriptors, DescriptorConfig):
            return self.descriptors
        return DescriptorConfig.from_names(self.descriptors)

    # -- estimator API ---------------------------------------------------

    def fit(self, X=None, y=None):
        """Validate parameters; the encoder itself is stateless."""
        self._slic_params()
        if not self.auto_grid:
            self._grid_spec()
        if self.max_cells < 1:
            raise ValueError(f"max_cells must be >= 1, got {self.max_cells}")
        self._descriptor_config()
        return self

    def transform(self, X):
        """Encode one image or a sequence of images.

        Accepts paths, arrays, or :class:`Image` objects; returns a single
        :class:`Sigrid` for a single input, else a list.
        """
        self.fit()
        if isinstance(X, (list, tuple)):
            return [self.encode(x)[0] for x in X]
        return self.encode(X)[0]

    def encode(self, image, mask=None) -> tuple[Sigrid, CellLabelGrid | None]:
        """Full per-image pipeline; also rasterizes ``mask`` when given."""
        img = as_image(image)
        m = as_mask(mask, like=img) if mask is not None else None
        sp = slic_segment(img, self._slic_params())
        if self.auto_grid:
            spec = min_collision_free_grid(sp, self.max_cells)
        else:
            spec = self._grid_spec()
        merged, ga = map_to_grid(sp, spec)
        sg = build_sigrid(img, merged, ga, self._descriptor_config())
        cells = rasterize_labels(m, merged, ga) if m is not None else None
        return sg, cells

    def rasterize(self, mask, sigrid: Sigrid) -> CellLabelGrid:
        """Project a ground-truth mask onto an encoded image's cells."""
        m = as_mask(mask)
        return rasterize_labels(m, sigrid.source_superpixelation, sigrid.assignment)

    def inverse_transform(self, cells: CellLabelGrid, sigrid: Sigrid) -> Mask:
        """Expand cell labels back to a pixel mask."""
        return backproject(cells, sigrid)

    def score_report(self, pred_cells, gt_mask, sigrid: Sigrid, beta: float = 0.3) -> MetricsReport:
        """Metrics for a cell prediction against a pixel ground truth."""
        return evaluate(pred_cells, as_mask(gt_mask), sigrid, beta=beta)
