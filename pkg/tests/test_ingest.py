"""Tests for image loading, patch sampling and centering."""

import gzip
import struct

import numpy as np
import pytest
from pydantic import ValidationError

from himax.errors import FormatError, GeometryError, LengthError
from himax.models.images import ImageGray, PatchMatrix, SamplerConfig
from himax.services.ingest import (
    center,
    load_idx_images,
    load_images,
    load_pgm,
    sample_patches,
    write_pgm,
)


def idx_bytes(images: np.ndarray, magic: int = 0x00000803) -> bytes:
    count, rows, cols = images.shape
    return struct.pack(">IIII", magic, count, rows, cols) + images.astype(np.uint8).tobytes()


class TestLoadPgm:
    def test_eight_bit(self, tmp_path):
        path = tmp_path / "small.pgm"
        path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
        image = load_pgm(path)
        assert (image.width, image.height) == (2, 2)
        np.testing.assert_allclose(image.intensities, [0.0, 1.0, 128 / 255, 64 / 255])
        np.testing.assert_allclose(image.intensities[2:], [0.50196, 0.25098], atol=1e-5)

    def test_sixteen_bit_zero(self, tmp_path):
        path = tmp_path / "deep.pgm"
        path.write_bytes(b"P5 3 2 65535\n" + bytes(12))
        image = load_pgm(path)
        assert image.pixels.shape == (2, 3)
        assert not image.pixels.any()

    def test_sixteen_bit_is_big_endian(self, tmp_path):
        path = tmp_path / "deep.pgm"
        path.write_bytes(b"P5\n1 1\n65535\n" + struct.pack(">H", 65535))
        assert load_pgm(path).intensities[0] == 1.0

    def test_header_comments(self, tmp_path):
        path = tmp_path / "commented.pgm"
        path.write_bytes(b"P5\n# made by hand\n2 1\n# depth\n255\n" + bytes([255, 0]))
        np.testing.assert_allclose(load_pgm(path).intensities, [1.0, 0.0])

    def test_ascii_variant_rejected(self, tmp_path):
        path = tmp_path / "ascii.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
        with pytest.raises(FormatError):
            load_pgm(path)

    def test_truncated_raster(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + bytes(10))
        with pytest.raises(LengthError):
            load_pgm(path)

    def test_write_then_load(self, tmp_path):
        pixels = np.array([[0.0, 1.0], [0.2, 0.6]])
        path = write_pgm(ImageGray(pixels=pixels), tmp_path / "out.pgm")
        np.testing.assert_allclose(load_pgm(path).pixels, pixels, atol=0.5 / 255)


class TestLoadIdx:
    def test_single_image(self, tmp_path):
        path = tmp_path / "one.idx"
        path.write_bytes(idx_bytes(np.array([[[0, 51], [102, 255]]])))
        (image,) = load_idx_images(path)
        np.testing.assert_allclose(image.intensities, [0.0, 0.2, 0.4, 1.0])

    def test_gzip_archive(self, tmp_path):
        stack = np.arange(2 * 3 * 3).reshape(2, 3, 3)
        path = tmp_path / "images.idx.gz"
        path.write_bytes(gzip.compress(idx_bytes(stack)))
        images = load_idx_images(path)
        assert len(images) == 2
        np.testing.assert_allclose(images[1].pixels, stack[1] / 255.0)

    def test_label_file_rejected(self, tmp_path):
        path = tmp_path / "labels.idx"
        path.write_bytes(idx_bytes(np.zeros((1, 2, 2)), magic=0x00000801))
        with pytest.raises(FormatError):
            load_idx_images(path)

    def test_payload_mismatch(self, tmp_path):
        path = tmp_path / "broken.idx"
        path.write_bytes(idx_bytes(np.zeros((2, 2, 2)))[:-1])
        with pytest.raises(LengthError):
            load_idx_images(path)

    def test_dispatch_by_signature(self, tmp_path):
        pgm = tmp_path / "a.pgm"
        pgm.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
        idx = tmp_path / "b.idx"
        idx.write_bytes(idx_bytes(np.zeros((3, 2, 2))))
        assert len(load_images([pgm, idx])) == 4

        other = tmp_path / "c.txt"
        other.write_bytes(b"hello")
        with pytest.raises(FormatError):
            load_images([other])


class TestImageModel:
    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            ImageGray(pixels=np.array([[0.5, 1.5]]))

    def test_patch_geometry(self):
        with pytest.raises(ValidationError):
            PatchMatrix(data=np.zeros((5, 3)), patch_width=2)


class TestSamplePatches:
    def test_single_corner(self, rng):
        image = ImageGray(pixels=rng.uniform(size=(12, 12)))
        patches = sample_patches([image], SamplerConfig(patch_width=12, count=3, seed=1))
        assert patches.data.shape == (144, 3)
        for column in patches.data.T:
            np.testing.assert_array_equal(column, image.intensities)

    def test_row_major_columns(self):
        image = ImageGray(pixels=np.arange(12.0).reshape(3, 4) / 11.0)
        patches = sample_patches([image], SamplerConfig(patch_width=2, count=50, seed=3))
        for column in patches.data.T:
            values = np.rint(column * 11).astype(int)
            top_left = values[0]
            np.testing.assert_array_equal(values, [top_left, top_left + 1,
                                                   top_left + 4, top_left + 5])

    def test_deterministic(self, texture_image):
        cfg = SamplerConfig(patch_width=5, count=200, seed=42)
        first = sample_patches([texture_image], cfg)
        second = sample_patches([texture_image], cfg)
        np.testing.assert_array_equal(first.data, second.data)

    def test_covers_every_image(self, rng):
        images = [ImageGray(pixels=np.full((4, 4), value)) for value in (0.0, 0.5, 1.0)]
        patches = sample_patches(images, SamplerConfig(patch_width=3, count=600, seed=0))
        assert set(np.unique(patches.data[0])) == {0.0, 0.5, 1.0}

    def test_image_too_small(self):
        image = ImageGray(pixels=np.zeros((4, 8)))
        with pytest.raises(GeometryError):
            sample_patches([image], SamplerConfig(patch_width=5, count=1))


class TestCenter:
    def test_arithmetic(self):
        centered, mean = center(PatchMatrix(data=np.array([[1.0, 3.0]]), patch_width=1))
        np.testing.assert_allclose(centered.data, [[-1.0, 1.0]])
        np.testing.assert_allclose(mean, [2.0])

    def test_already_centered(self):
        data = np.array([[1.0, -1.0], [2.0, -2.0], [0.0, 0.0], [3.0, -3.0]])
        centered, mean = center(PatchMatrix(data=data, patch_width=2))
        np.testing.assert_array_equal(centered.data, data)
        np.testing.assert_array_equal(mean, np.zeros(4))

    def test_round_trip(self, rng):
        data = rng.standard_normal((4, 100)) + 5.0
        centered, mean = center(PatchMatrix(data=data, patch_width=2))
        assert np.abs(centered.data.mean(axis=1)).max() < 1e-12
        np.testing.assert_allclose(centered.data + mean[:, None], data, atol=1e-12)
