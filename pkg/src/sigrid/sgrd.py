"""SGRD / SGPD binary formats.

SGRD is the self-contained on-disk form of one encoded image (everything
back-projection needs), little-endian throughout:

    magic  "SGRD"
    u16    version (= 1)
    u16    flags (bit0: label section present)
    u32    image width, u32 image height
    u16    grid width, u16 grid height
    u16    descriptor channels d
    u32    retained-cell count n
    u16    descriptor-config bitmask
    n x    record: u16 row, u16 col, u32 region id, d x f32 descriptor
           (records sorted by (row, col))
    n x u8 labels, same record order (only if flag bit0; 255 is reserved
           and never appears - retained cells always carry a real label)
    u32    run count, then runs of (u32 length, u32 region id) covering
           width*height pixels row-major; id 0 marks pixels of discarded
           regions

SGPD is the cell-prediction exchange format emitted by training harnesses:

    magic "SGPD", u16 grid width, u16 grid height,
    w'*h' f32 scores row-major, w'*h' u8 hard labels row-major.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .assembly import EMPTY, CellLabelGrid, Sigrid, expand_masked_map, masked_region_map
from .errors import FileFormatError
from .gridmap import GridSpec

__all__ = [
    "SGRD_MAGIC",
    "SGRD_VERSION",
    "SgrdFile",
    "sgrd_from_artifacts",
    "dumps_sgrd",
    "loads_sgrd",
    "write_sgrd",
    "read_sgrd",
    "encode_rle",
    "decode_rle",
    "backproject_file",
    "CellPrediction",
    "dumps_sgpd",
    "loads_sgpd",
    "write_sgpd",
    "read_sgpd",
]

SGRD_MAGIC = b"SGRD"
SGRD_VERSION = 1
SGPD_MAGIC = b"SGPD"
_FLAG_LABELS = 0x0001
_HEADER = struct.Struct("<4sHHIIHHHIH")


@dataclass
class SgrdFile:
    """Decoded SGRD contents.

    ``rows``/``cols``/``region_ids``/``descriptors`` are parallel arrays in
    record order (sorted by row, then col); ``labels`` is None when the
    file has no label section. ``map_ids`` is the decoded (h, w) region
    raster with 0 at discarded pixels.
    """

    image_width: int
    image_height: int
    grid: GridSpec
    channels: int
    config_bitmask: int
    rows: np.ndarray
    cols: np.ndarray
    region_ids: np.ndarray
    descriptors: np.ndarray  # (n, d) float32
    labels: np.ndarray | None
    map_ids: np.ndarray

    @property
    def retained_count(self) -> int:
        return len(self.rows)

    def dense(self) -> np.ndarray:
        """(d, grid_h, grid_w) float32, zeros at unassigned cells."""
        out = np.zeros((self.channels, self.grid.grid_height, self.grid.grid_width), dtype=np.float32)
        out[:, self.rows, self.cols] = self.descriptors.T
        return out

    def label_grid(self) -> np.ndarray:
        """(grid_h, grid_w) int16 with EMPTY at unassigned cells."""
        if self.labels is None:
            raise FileFormatError("file carries no label section")
        out = np.full((self.grid.grid_height, self.grid.grid_width), EMPTY, dtype=np.int16)
        out[self.rows, self.cols] = self.labels.astype(np.int16)
        return out


def encode_rle(flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run-length encode a 1-D array into (lengths, values)."""
    flat = np.asarray(flat)
    if flat.size == 0:
        return np.empty(0, dtype=np.uint32), np.empty(0, dtype=np.uint32)
    change = np.nonzero(flat[1:] != flat[:-1])[0] + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [len(flat)]])
    return (ends - starts).astype(np.uint32), flat[starts].astype(np.uint32)


def decode_rle(lengths: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.repeat(values, lengths)


def sgrd_from_artifacts(sg: Sigrid, cells: CellLabelGrid | None = None) -> SgrdFile:
    """Bundle a grid tensor (and optionally its label grid) for writing."""
    items = sorted(((row, col, rid) for rid, (row, col) in sg.assignment.assignments.items()))
    rows = np.array([it[0] for it in items], dtype=np.uint16)
    cols = np.array([it[1] for it in items], dtype=np.uint16)
    rids = np.array([it[2] for it in items], dtype=np.uint32)
    desc = np.array([sg.cells[(r, c)] for r, c, _ in items], dtype=np.float32)
    desc = desc.reshape(len(items), sg.channels)

    labels = None
    if cells is not None:
        if cells.spec != sg.spec:
            raise FileFormatError(f"label grid {cells.spec} != sigrid grid {sg.spec}")
        vals = cells.labels[rows.astype(int), cols.astype(int)]
        if (vals == EMPTY).any():
            raise FileFormatError("a retained cell carries the EMPTY label")
        if vals.max(initial=0) > 254:
            raise FileFormatError("labels above 254 collide with the reserved u8 value")
        labels = vals.astype(np.uint8)

    return SgrdFile(
        image_width=sg.source_dims[0],
        image_height=sg.source_dims[1],
        grid=sg.spec,
        channels=sg.channels,
        config_bitmask=sg.config.bitmask,
        rows=rows,
        cols=cols,
        region_ids=rids,
        descriptors=desc,
        labels=labels,
        map_ids=masked_region_map(sg.source_superpixelation, sg.assignment).astype(np.int64),
    )


def dumps_sgrd(f: SgrdFile) -> bytes:
    flags = _FLAG_LABELS if f.labels is not None else 0
    parts = [
        _HEADER.pack(
            SGRD_MAGIC,
            SGRD_VERSION,
            flags,
            f.image_width,
            f.image_height,
            f.grid.grid_width,
            f.grid.grid_height,
            f.channels,
            f.retained_count,
            f.config_bitmask,
        )
    ]
    record = np.empty(
        f.retained_count,
        dtype=np.dtype(
            [("row", "<u2"), ("col", "<u2"), ("rid", "<u4"), ("desc", "<f4", (f.channels,))]
        ),
    )
    record["row"] = f.rows
    record["col"] = f.cols
    record["rid"] = f.region_ids
    record["desc"] = f.descriptors
    parts.append(record.tobytes())
    if f.labels is not None:
        parts.append(f.labels.astype("<u1").tobytes())
    lengths, values = encode_rle(f.map_ids.ravel())
    parts.append(struct.pack("<I", len(lengths)))
    runs = np.empty(len(lengths), dtype=np.dtype([("len", "<u4"), ("val", "<u4")]))
    runs["len"] = lengths
    runs["val"] = values
    parts.append(runs.tobytes())
    return b"".join(parts)


def loads_sgrd(data: bytes) -> SgrdFile:
    if len(data) < _HEADER.size:
        raise FileFormatError("truncated header")
    (magic, version, flags, iw, ih, gw, gh, channels, count, bitmask) = _HEADER.unpack_from(data)
    if magic != SGRD_MAGIC:
        raise FileFormatError(f"bad magic {magic!r}")
    if version != SGRD_VERSION:
        raise FileFormatError(f"unsupported version {version}")
    if flags & ~_FLAG_LABELS:
        raise FileFormatError(f"unknown flag bits 0x{flags:04x}")
    offset = _HEADER.size

    rec_dtype = np.dtype(
        [("row", "<u2"), ("col", "<u2"), ("rid", "<u4"), ("desc", "<f4", (channels,))]
    )
    rec_bytes = count * rec_dtype.itemsize
    if len(data) < offset + rec_bytes:
        raise FileFormatError("truncated record section")
    records = np.frombuffer(data, dtype=rec_dtype, count=count, offset=offset)
    offset += rec_bytes

    labels = None
    if flags & _FLAG_LABELS:
        if len(data) < offset + count:
            raise FileFormatError("truncated label section")
        labels = np.frombuffer(data, dtype="<u1", count=count, offset=offset).copy()
        if (labels == 255).any():
            raise FileFormatError("label 255 is reserved")
        offset += count

    if len(data) < offset + 4:
        raise FileFormatError("truncated run count")
    (run_count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    run_dtype = np.dtype([("len", "<u4"), ("val", "<u4")])
    if len(data) < offset + run_count * run_dtype.itemsize:
        raise FileFormatError("truncated run section")
    runs = np.frombuffer(data, dtype=run_dtype, count=run_count, offset=offset)
    offset += run_count * run_dtype.itemsize
    if offset != len(data):
        raise FileFormatError(f"{len(data) - offset} trailing bytes")

    flat = decode_rle(runs["len"].astype(np.int64), runs["val"].astype(np.int64))
    if len(flat) != iw * ih:
        raise FileFormatError(f"runs cover {len(flat)} pixels, expected {iw * ih}")

    grid = GridSpec(gw, gh)
    rows = records["row"].astype(np.int64)
    cols = records["col"].astype(np.int64)
    if count and (rows.max() >= gh or cols.max() >= gw):
        raise FileFormatError("record cell outside the grid")
    return SgrdFile(
        image_width=iw,
        image_height=ih,
        grid=grid,
        channels=channels,
        config_bitmask=bitmask,
        rows=rows,
        cols=cols,
        region_ids=records["rid"].astype(np.int64),
        descriptors=records["desc"].copy(),
        labels=labels,
        map_ids=flat.reshape(ih, iw),
    )


def write_sgrd(path, f: SgrdFile) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_sgrd(f))


def read_sgrd(path) -> SgrdFile:
    with open(path, "rb") as fh:
        return loads_sgrd(fh.read())


def backproject_file(f: SgrdFile, cell_values: np.ndarray) -> np.ndarray:
    """Expand per-cell values to pixels using only the file's contents."""
    expected = (f.grid.grid_height, f.grid.grid_width)
    if cell_values.shape != expected:
        raise FileFormatError(f"cell grid shape {cell_values.shape} != {expected}")
    return expand_masked_map(cell_values, f.map_ids, f.region_ids, f.rows, f.cols)


# --- SGPD cell predictions -------------------------------------------------

_SGPD_HEADER = struct.Struct("<4sHH")


@dataclass
class CellPrediction:
    """Per-cell scores in [0, 1] plus hard labels, both (grid_h, grid_w)."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.scores.shape != self.labels.shape:
            raise FileFormatError("score and label grids differ in shape")

    @property
    def grid(self) -> GridSpec:
        h, w = self.scores.shape
        return GridSpec(w, h)


def dumps_sgpd(pred: CellPrediction) -> bytes:
    h, w = pred.scores.shape
    return (
        _SGPD_HEADER.pack(SGPD_MAGIC, w, h)
        + pred.scores.astype("<f4").tobytes()
        + pred.labels.astype("<u1").tobytes()
    )


def loads_sgpd(data: bytes) -> CellPrediction:
    if len(data) < _SGPD_HEADER.size:
        raise FileFormatError("truncated header")
    magic, w, h = _SGPD_HEADER.unpack_from(data)
    if magic != SGPD_MAGIC:
        raise FileFormatError(f"bad magic {magic!r}")
    n = w * h
    expected = _SGPD_HEADER.size + 4 * n + n
    if len(data) != expected:
        raise FileFormatError(f"payload is {len(data)} bytes, expected {expected}")
    scores = np.frombuffer(data, dtype="<f4", count=n, offset=_SGPD_HEADER.size)
    labels = np.frombuffer(data, dtype="<u1", count=n, offset=_SGPD_HEADER.size + 4 * n)
    return CellPrediction(
        scores=scores.reshape(h, w).astype(np.float64),
        labels=labels.reshape(h, w).astype(np.int16),
    )


def write_sgpd(path, pred: CellPrediction) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_sgpd(pred))


def read_sgpd(path) -> CellPrediction:
    with open(path, "rb") as fh:
        return loads_sgpd(fh.read())
