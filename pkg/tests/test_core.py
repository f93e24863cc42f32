import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubbleseg.core import (AnnotationSet, ConfigInvalid, CorruptFile, Instance,
                            LengthMismatch, ShapeMismatch, UnsupportedFormat,
                            as_gray, as_mask, read_image, read_raster,
                            rle_decode, rle_encode, write_image, write_raster)


class TestRle:
    def test_all_zero(self):
        assert rle_encode(np.zeros((2, 2), dtype=bool)) == [4]

    def test_all_one(self):
        assert rle_encode(np.ones((2, 2), dtype=bool)) == [0, 4]

    def test_hand_scan(self):
        mask = np.array([[1, 0], [0, 1]], dtype=bool)
        assert rle_encode(mask) == [0, 1, 2, 1]

    def test_decode_trivial(self):
        assert not rle_decode([4], 2, 2).any()
        assert rle_decode([0, 4], 2, 2).all()

    def test_decode_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rle_decode([3], 2, 2)

    def test_round_trip_random(self, rng):
        for _ in range(1000):
            mask = rng.random((32, 32)) < rng.random()
            counts = rle_encode(mask)
            assert sum(counts) == 32 * 32
            np.testing.assert_array_equal(rle_decode(counts, 32, 32), mask)

    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, w, h, seed):
        mask = np.random.default_rng(seed).random((h, w)) < 0.5
        assert np.array_equal(rle_decode(rle_encode(mask), w, h), mask)


class TestValidators:
    def test_rejects_3d(self):
        with pytest.raises(ShapeMismatch):
            as_gray(np.zeros((2, 2, 2)))

    def test_rejects_out_of_range(self):
        with pytest.raises(ShapeMismatch):
            as_gray(np.full((2, 2), 1.5))

    def test_rejects_nonbinary_mask(self):
        with pytest.raises(ShapeMismatch):
            as_mask(np.full((2, 2), 2))

    def test_accepts_int_mask(self):
        m = as_mask(np.array([[0, 1], [1, 0]]))
        assert m.dtype == bool


class TestInstance:
    def test_from_mask_bbox_area(self):
        mask = np.zeros((5, 6), dtype=bool)
        mask[1:3, 2:5] = True
        inst = Instance.from_mask(1, mask, source="network")
        assert inst.area == 6
        assert inst.bbox == (2, 1, 4, 2)
        np.testing.assert_array_equal(inst.to_mask(), mask)

    def test_rejects_empty(self):
        with pytest.raises(ConfigInvalid):
            Instance.from_mask(1, np.zeros((4, 4), dtype=bool))

    def test_rejects_bad_source(self):
        mask = np.ones((2, 2), dtype=bool)
        with pytest.raises(ConfigInvalid):
            Instance.from_mask(1, mask, source="martian")


class TestAnnotationSet:
    def _sample(self):
        m1 = np.zeros((8, 8), dtype=bool)
        m1[1:4, 1:4] = True
        m2 = np.zeros((8, 8), dtype=bool)
        m2[5:7, 5:7] = True
        return AnnotationSet(
            image_id="img0", width=8, height=8,
            instances=[Instance.from_mask(1, m1, source="network"),
                       Instance.from_mask(2, m2, source="edge_detector",
                                          size_class="small")],
            fully_labeled=False)

    def test_json_round_trip(self):
        ann = self._sample()
        again = AnnotationSet.from_json(json.loads(json.dumps(ann.to_json())))
        assert again.image_id == ann.image_id
        assert again.fully_labeled is False
        assert len(again.instances) == 2
        for a, b in zip(ann.instances, again.instances):
            assert a.rle == b.rle
            assert a.source == b.source
            assert a.size_class == b.size_class
            assert a.bbox == b.bbox

    def test_duplicate_ids_rejected(self):
        mask = np.ones((4, 4), dtype=bool)
        with pytest.raises(ConfigInvalid):
            AnnotationSet(image_id="x", width=4, height=4,
                          instances=[Instance.from_mask(1, mask),
                                     Instance.from_mask(1, mask)])

    def test_file_round_trip(self, tmp_path):
        ann = self._sample()
        path = tmp_path / "ann.json"
        ann.save(path)
        again = AnnotationSet.load(path)
        assert again.to_json() == ann.to_json()


class TestImageIo:
    def test_pgm_normalization(self, tmp_path):
        path = tmp_path / "white.pgm"
        path.write_bytes(b"P5 4 4 255\n" + bytes([255] * 16))
        img = read_image(path)
        assert img.shape == (4, 4)
        assert (img == 1.0).all()

    def test_midlevel_pixel(self, tmp_path):
        path = tmp_path / "mid.pgm"
        path.write_bytes(b"P5 1 1 255\n" + bytes([128]))
        assert read_image(path)[0, 0] == pytest.approx(128 / 255)

    def test_png_round_trip(self, tmp_path, rng):
        img = (rng.integers(0, 256, (6, 6)) / 255).astype(np.float32)
        path = tmp_path / "img.png"
        write_image(img, path)
        np.testing.assert_allclose(read_image(path), img, atol=1e-6)

    def test_unsupported_format(self, tmp_path):
        path = tmp_path / "img.tiff"
        path.write_bytes(b"nope")
        with pytest.raises(UnsupportedFormat):
            read_image(path)

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "img.png"
        path.write_bytes(b"this is not a png")
        with pytest.raises(CorruptFile):
            read_image(path)


class TestF32R:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        arr = rng.random((7, 5)).astype(np.float32)
        path = tmp_path / "map.f32r"
        write_raster(arr, path)
        again = read_raster(path)
        assert again.dtype == np.float32
        np.testing.assert_array_equal(again, arr)

    def test_header_bytes(self, tmp_path):
        path = tmp_path / "map.f32r"
        write_raster(np.zeros((2, 3), dtype=np.float32), path)
        raw = path.read_bytes()
        assert raw[:4] == b"F32R"
        assert int.from_bytes(raw[4:8], "little") == 3   # width
        assert int.from_bytes(raw[8:12], "little") == 2  # height

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "map.f32r"
        path.write_bytes(b"XXXX" + b"\0" * 16)
        with pytest.raises(CorruptFile):
            read_raster(path)
