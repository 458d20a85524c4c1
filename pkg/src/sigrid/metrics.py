"""Segmentation quality metrics at the pixel and the cell level.

Per-class IoU uses the empty-class convention: a class absent from both
prediction and ground truth contributes 1 (this only matters for the
degenerate single-class case, where it keeps the mean at 1 instead of NaN).
Corpus aggregation is the unweighted mean of per-image metrics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .assembly import (
    EMPTY,
    CellLabelGrid,
    Sigrid,
    expand_cell_values,
    rasterize_labels,
    rasterize_masked_map,
)
from .errors import DimensionMismatchError
from .gridmap import GridAssignment
from .imaging import Mask, Superpixelation

__all__ = [
    "MetricsReport",
    "accuracy",
    "iou",
    "max_f_beta",
    "max_iou",
    "evaluate",
    "evaluate_file",
    "REPORT_COLUMNS",
    "format_csv",
    "format_table",
    "mean_report",
]

DEFAULT_BETA = 0.3
_THRESHOLDS = np.arange(256) / 255.0  # fixed sweep for MaxF-beta determinism


@dataclass(frozen=True)
class MetricsReport:
    pixel_accuracy: float
    pixel_iou: float
    pixel_max_f_beta: float
    cell_accuracy: float
    cell_iou: float
    cell_max_f_beta: float
    max_iou: float
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        for name in ("pixel_accuracy", "pixel_iou", "pixel_max_f_beta",
                     "cell_accuracy", "cell_iou", "cell_max_f_beta", "max_iou"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} out of [0,1]: {v}")


def _as_labels(x) -> np.ndarray:
    return x.labels if isinstance(x, Mask) else np.asarray(x)


def accuracy(pred, gt) -> float:
    """Fraction of positions with matching labels."""
    p, g = _as_labels(pred), _as_labels(gt)
    if p.shape != g.shape:
        raise DimensionMismatchError(f"prediction {p.shape} vs ground truth {g.shape}")
    if p.size == 0:
        return 1.0
    return float((p == g).mean())


def iou(pred, gt) -> float:
    """Mean per-class intersection over union.

    Classes are those present in either input; symmetric in its arguments.
    """
    p, g = _as_labels(pred), _as_labels(gt)
    if p.shape != g.shape:
        raise DimensionMismatchError(f"prediction {p.shape} vs ground truth {g.shape}")
    classes = np.union1d(np.unique(p), np.unique(g))
    scores = []
    for cls in classes:
        inter = np.count_nonzero((p == cls) & (g == cls))
        union = np.count_nonzero((p == cls) | (g == cls))
        scores.append(1.0 if union == 0 else inter / union)
    return float(np.mean(scores)) if scores else 1.0


def max_f_beta(scores, gt, beta: float = DEFAULT_BETA) -> float:
    """Best F-beta over 256 evenly spaced binarization thresholds.

    ``scores`` are per-position reals in [0, 1]; ``gt`` must be binary.
    At each threshold t the prediction is ``scores >= t``; a threshold
    where precision or recall is undefined contributes 0. ``beta`` enters
    the formula as beta^2.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    g = _as_labels(gt).ravel()
    if s.shape != g.shape:
        raise DimensionMismatchError(f"scores {s.shape} vs ground truth {g.shape}")
    if not np.isin(g, (0, 1)).all():
        raise ValueError("max_f_beta requires a binary ground truth")
    if s.size == 0:
        return 0.0
    if s.min() < 0.0 or s.max() > 1.0:
        raise ValueError("scores must lie in [0, 1]")
    n_pos = int(np.count_nonzero(g == 1))
    if n_pos == 0:
        return 0.0  # recall undefined at every threshold

    # bucket each score by the largest threshold it still clears, then get
    # per-threshold counts from suffix sums; exactly equivalent to looping
    # ``s >= t`` over the 256 thresholds
    idx = np.searchsorted(_THRESHOLDS, s, side="right") - 1
    pred_at = np.cumsum(np.bincount(idx, minlength=256)[::-1])[::-1].astype(np.float64)
    tp_at = np.cumsum(np.bincount(idx[g == 1], minlength=256)[::-1])[::-1].astype(np.float64)

    b2 = beta * beta
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_at > 0, tp_at / np.maximum(pred_at, 1), np.nan)
        recall = tp_at / n_pos
        denom = b2 * precision + recall
        fbeta = np.where(
            np.isnan(precision) | (denom <= 0), 0.0, (1 + b2) * precision * recall / denom
        )
    return float(fbeta.max())


def max_iou(gt: Mask, sp: Superpixelation, ga: GridAssignment) -> float:
    """Pixel IoU of a perfectly classified grid against the ground truth.

    This is the upper bound the superpixelation imposes: rasterize the
    ground truth onto the cells, expand back to pixels, compare.
    """
    cells = rasterize_labels(gt, sp, ga)
    labels = expand_cell_values(cells.labels.astype(np.int32), sp, ga)
    return iou(Mask(labels), gt)


def evaluate(pred_cells, gt_mask: Mask, sg: Sigrid, beta: float = DEFAULT_BETA) -> MetricsReport:
    """Full report for one image.

    ``pred_cells`` is either a :class:`CellLabelGrid` of hard labels or a
    float array of per-cell scores in [0, 1] (thresholded at 0.5 for the
    hard metrics). Cell metrics run over non-EMPTY cells only; pixel
    metrics run after back-projection.

    The back-projected IoU is checked against the superpixelation's
    round-trip bound on every call. On object-centric masks the bound
    always holds; a violation (possible when a region carries a large
    minority class, i.e. heavily misaligned or noisy ground truth) is
    reported as a RuntimeWarning rather than an error so the metrics still
    come back.
    """
    sp, ga = sg.source_superpixelation, sg.assignment
    gt_cells = rasterize_labels(gt_mask, sp, ga).labels
    return _report(
        pred_cells,
        gt_cells,
        gt_mask,
        expander=lambda values: expand_cell_values(values, sp, ga),
        beta=beta,
    )


def evaluate_file(f, pred, gt_mask: Mask, beta: float = DEFAULT_BETA) -> MetricsReport:
    """Like :func:`evaluate`, but working from decoded SGRD/SGPD payloads.

    ``f`` is an :class:`sigrid.sgrd.SgrdFile`; ``pred`` is a
    :class:`sigrid.sgrd.CellPrediction` (scores drive MaxF-beta, hard
    labels everything else).
    """
    from .sgrd import backproject_file  # local import; sgrd depends on assembly only

    if (gt_mask.width, gt_mask.height) != (f.image_width, f.image_height):
        raise DimensionMismatchError(
            f"mask {gt_mask.width}x{gt_mask.height} vs file "
            f"{f.image_width}x{f.image_height}"
        )
    gt_cells = rasterize_masked_map(
        gt_mask.labels, f.map_ids, f.region_ids, f.rows, f.cols, f.grid
    )
    hard = CellLabelGrid(f.grid, np.where(gt_cells != EMPTY, pred.labels, EMPTY).astype(np.int16))
    report = _report(
        hard,
        gt_cells,
        gt_mask,
        expander=lambda values: backproject_file(f, values),
        beta=beta,
        score_grid=pred.scores,
    )
    return report


def _report(pred_cells, gt_cells, gt_mask, expander, beta, score_grid=None) -> MetricsReport:
    occ = gt_cells != EMPTY
    if isinstance(pred_cells, CellLabelGrid):
        if (pred_cells.labels[occ] == EMPTY).any():
            raise ValueError("prediction carries EMPTY labels on retained cells")
        hard = pred_cells.labels.astype(np.int32)
        if score_grid is None:
            score_grid = (hard > 0).astype(np.float64)
    else:
        scores = np.asarray(pred_cells, dtype=np.float64)
        if scores.shape != gt_cells.shape:
            raise DimensionMismatchError(
                f"score grid {scores.shape} vs cell grid {gt_cells.shape}"
            )
        if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
            raise ValueError("cell scores must lie in [0, 1]")
        score_grid = scores
        hard = (scores >= 0.5).astype(np.int32)

    cell_acc = accuracy(hard[occ], gt_cells[occ])
    cell_iou = iou(hard[occ], gt_cells[occ])
    cell_maxf = max_f_beta(score_grid[occ], gt_cells[occ].astype(np.int32), beta)

    pixel_pred = Mask(expander(hard))
    pixel_scores = expander(score_grid)
    pixel_acc = accuracy(pixel_pred, gt_mask)
    pixel_iou_v = iou(pixel_pred, gt_mask)
    pixel_maxf = max_f_beta(pixel_scores, gt_mask, beta)
    bound = iou(Mask(expander(np.where(occ, gt_cells, 0).astype(np.int32))), gt_mask)
    if pixel_iou_v > bound + 1e-9:
        warnings.warn(
            f"back-projected IoU {pixel_iou_v:.6f} exceeds the round-trip bound "
            f"{bound:.6f}; the ground truth is heavily misaligned with the superpixels",
            RuntimeWarning,
            stacklevel=3,
        )
    return MetricsReport(
        pixel_accuracy=pixel_acc,
        pixel_iou=pixel_iou_v,
        pixel_max_f_beta=pixel_maxf,
        cell_accuracy=cell_acc,
        cell_iou=cell_iou,
        cell_max_f_beta=cell_maxf,
        max_iou=bound,
        beta=beta,
    )


REPORT_COLUMNS = (
    "image_id",
    "pixel_acc",
    "pixel_iou",
    "pixel_maxf",
    "cell_acc",
    "cell_iou",
    "cell_maxf",
    "max_iou",
)


def _row_values(report: MetricsReport) -> tuple[float, ...]:
    return (
        report.pixel_accuracy,
        report.pixel_iou,
        report.pixel_max_f_beta,
        report.cell_accuracy,
        report.cell_iou,
        report.cell_max_f_beta,
        report.max_iou,
    )


def mean_report(reports: list[MetricsReport]) -> MetricsReport:
    """Unweighted per-image mean."""
    if not reports:
        raise ValueError("no reports to aggregate")
    cols = np.array([_row_values(r) for r in reports]).mean(axis=0)
    return MetricsReport(*cols, beta=reports[0].beta)


def format_csv(rows: list[tuple[str, MetricsReport]]) -> str:
    """Machine-readable rows, one per image plus a MEAN row."""
    lines = [",".join(REPORT_COLUMNS)]
    for image_id, rep in rows:
        lines.append(",".join([image_id] + [f"{v:.6f}" for v in _row_values(rep)]))
    mean = mean_report([rep for _, rep in rows])
    lines.append(",".join(["MEAN"] + [f"{v:.6f}" for v in _row_values(mean)]))
    return "\n".join(lines) + "\n"


def format_table(rows: list[tuple[str, MetricsReport]]) -> str:
    """Aligned plain-text table with the same columns as the CSV."""
    mean = mean_report([rep for _, rep in rows])
    all_rows = [(image_id, rep) for image_id, rep in rows] + [("MEAN", mean)]
    id_width = max(len(REPORT_COLUMNS[0]), max(len(i) for i, _ in all_rows))
    header = REPORT_COLUMNS[0].ljust(id_width) + "".join(c.rjust(12) for c in REPORT_COLUMNS[1:])
    lines = [header, "-" * len(header)]
    for image_id, rep in all_rows:
        lines.append(
            image_id.ljust(id_width) + "".join(f"{v:12.4f}" for v in _row_values(rep))
        )
    return "\n".join(lines) + "\n"
