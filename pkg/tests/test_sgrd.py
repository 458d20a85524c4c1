import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigrid.assembly import EMPTY, CellLabelGrid, backproject, rasterize_labels
from sigrid.errors import FileFormatError
from sigrid.imaging import Mask
from sigrid.sgrd import (
    CellPrediction,
    backproject_file,
    decode_rle,
    dumps_sgpd,
    dumps_sgrd,
    encode_rle,
    loads_sgpd,
    loads_sgrd,
    read_sgrd,
    sgrd_from_artifacts,
    write_sgrd,
)

from .test_assembly import build_all


def build_file(seed=50, with_labels=True, **kw):
    img, sp, ga, sg = build_all(36, 28, 18, seed=seed, **kw)
    cells = None
    if with_labels:
        rng = np.random.default_rng(seed)
        gt = Mask((rng.random((28, 36)) < 0.5).astype(int))
        cells = rasterize_labels(gt, sp, ga)
    return sg, cells, sgrd_from_artifacts(sg, cells)


class TestRle:
    def test_simple_runs(self):
        lengths, values = encode_rle(np.array([5, 5, 5, 2, 2, 9]))
        np.testing.assert_array_equal(lengths, [3, 2, 1])
        np.testing.assert_array_equal(values, [5, 2, 9])

    def test_empty(self):
        lengths, values = encode_rle(np.array([], dtype=int))
        assert len(lengths) == 0 and len(values) == 0

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=200))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip(self, data):
        arr = np.array(data, dtype=np.uint32)
        lengths, values = encode_rle(arr)
        np.testing.assert_array_equal(decode_rle(lengths, values), arr)
        # canonical form: no empty runs, no adjacent equal values
        assert (lengths > 0).all()
        assert (values[1:] != values[:-1]).all()


class TestSgrdRoundtrip:
    def test_bytes_roundtrip_with_labels(self):
        _, _, f = build_file()
        data = dumps_sgrd(f)
        again = dumps_sgrd(loads_sgrd(data))
        assert data == again

    def test_bytes_roundtrip_without_labels(self):
        _, _, f = build_file(with_labels=False)
        data = dumps_sgrd(f)
        parsed = loads_sgrd(data)
        assert parsed.labels is None
        assert dumps_sgrd(parsed) == data

    def test_fields_survive(self):
        sg, cells, f = build_file()
        parsed = loads_sgrd(dumps_sgrd(f))
        assert parsed.image_width == 36 and parsed.image_height == 28
        assert parsed.grid == sg.spec
        assert parsed.channels == sg.channels
        assert parsed.config_bitmask == sg.config.bitmask
        np.testing.assert_array_equal(parsed.rows, f.rows)
        np.testing.assert_array_equal(parsed.cols, f.cols)
        np.testing.assert_array_equal(parsed.region_ids, f.region_ids)
        np.testing.assert_array_equal(parsed.descriptors, f.descriptors)
        np.testing.assert_array_equal(parsed.labels, f.labels)
        np.testing.assert_array_equal(parsed.map_ids, f.map_ids)

    def test_records_sorted_by_row_col(self):
        _, _, f = build_file()
        keys = list(zip(f.rows.tolist(), f.cols.tolist()))
        assert keys == sorted(keys)

    def test_descriptors_are_f32_exact(self):
        sg, _, f = build_file()
        parsed = loads_sgrd(dumps_sgrd(f))
        for i, (row, col) in enumerate(zip(f.rows, f.cols)):
            np.testing.assert_array_equal(
                parsed.descriptors[i], sg.cells[(int(row), int(col))].astype(np.float32)
            )

    def test_file_io(self, tmp_path):
        _, _, f = build_file()
        p = tmp_path / "x.sgrd"
        write_sgrd(p, f)
        assert dumps_sgrd(read_sgrd(p)) == dumps_sgrd(f)

    def test_dense_shape(self):
        sg, _, f = build_file()
        dense = f.dense()
        assert dense.shape == (sg.channels, 8, 8)
        assert np.count_nonzero(dense.any(axis=0)) == f.retained_count


class TestSgrdErrors:
    def test_bad_magic(self):
        _, _, f = build_file()
        data = bytearray(dumps_sgrd(f))
        data[0] = ord("X")
        with pytest.raises(FileFormatError, match="magic"):
            loads_sgrd(bytes(data))

    def test_truncated(self):
        _, _, f = build_file()
        data = dumps_sgrd(f)
        with pytest.raises(FileFormatError):
            loads_sgrd(data[: len(data) // 2])

    def test_trailing_garbage(self):
        _, _, f = build_file()
        with pytest.raises(FileFormatError, match="trailing"):
            loads_sgrd(dumps_sgrd(f) + b"\x00")

    def test_bad_version(self):
        _, _, f = build_file()
        data = bytearray(dumps_sgrd(f))
        data[4] = 9
        with pytest.raises(FileFormatError, match="version"):
            loads_sgrd(bytes(data))

    def test_label_grid_requires_section(self):
        _, _, f = build_file(with_labels=False)
        with pytest.raises(FileFormatError, match="label"):
            f.label_grid()


class TestFileBackprojection:
    def test_matches_in_memory_backprojection(self):
        sg, cells, f = build_file(seed=51, grid=3, merge=False)
        assert sg.assignment.discarded
        pred_mask = backproject(cells, sg)
        values = cells.labels.astype(np.int32)
        from_file = backproject_file(loads_sgrd(dumps_sgrd(f)), values)
        np.testing.assert_array_equal(from_file, pred_mask.labels)

    def test_label_grid_roundtrip(self):
        sg, cells, f = build_file(seed=52)
        parsed = loads_sgrd(dumps_sgrd(f))
        grid = parsed.label_grid()
        np.testing.assert_array_equal(grid, cells.labels)


class TestSgpd:
    def test_roundtrip(self):
        rng = np.random.default_rng(0)
        scores = rng.random((8, 8)).astype(np.float32).astype(np.float64)
        labels = (scores >= 0.5).astype(np.int16)
        pred = CellPrediction(scores=scores, labels=labels)
        again = loads_sgpd(dumps_sgpd(pred))
        np.testing.assert_array_equal(again.scores, scores.astype(np.float32))
        np.testing.assert_array_equal(again.labels, labels)

    def test_bad_magic(self):
        with pytest.raises(FileFormatError, match="magic"):
            loads_sgpd(b"XXXX" + b"\x00" * 16)

    def test_size_mismatch(self):
        pred = CellPrediction(scores=np.zeros((2, 2)), labels=np.zeros((2, 2), dtype=np.int16))
        with pytest.raises(FileFormatError):
            loads_sgpd(dumps_sgpd(pred)[:-1])
