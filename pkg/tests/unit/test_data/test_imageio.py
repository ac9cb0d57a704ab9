"""Tests for image reading and writing."""

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from s3mamba.core.exceptions import ImageFormatError
from s3mamba.data.imageio import list_images
from s3mamba.data.imageio import load_image
from s3mamba.data.imageio import save_image
from s3mamba.data.imageio import to_uint8


class TestImageIO:
    """Test PNG and PPM round trips and the rejected formats."""

    def test_ppm_round_trip(self, tmp_path: Path) -> None:
        """Test that a 2x1 P6 image round-trips exactly."""
        path = tmp_path / "tiny.ppm"
        path.write_bytes(b"P6\n2 1\n255\n" + bytes([255, 0, 10, 0, 128, 255]))
        img = load_image(path)
        assert img.shape == (3, 1, 2)
        assert img[:, 0, 0].tolist() == [1.0, 0.0, 10 / 255]
        save_image(tmp_path / "again.ppm", img)
        assert np.array_equal(load_image(tmp_path / "again.ppm"), img)

    def test_png_round_trip(self, tmp_path: Path) -> None:
        """Test that 8-bit data survives save and load."""
        data = np.arange(3 * 4 * 5).reshape(3, 4, 5) % 256 / 255.0
        save_image(tmp_path / "x.png", data)
        assert np.array_equal(load_image(tmp_path / "x.png"), data)

    def test_alpha_dropped(self, tmp_path: Path) -> None:
        """Test that RGBA keeps its color channels."""
        rgba = np.zeros((2, 2, 4), dtype=np.uint8)
        rgba[..., 0] = 200
        rgba[..., 3] = 17
        Image.fromarray(rgba).save(tmp_path / "a.png")
        img = load_image(tmp_path / "a.png")
        assert img.shape == (3, 2, 2)
        assert np.array_equal(img[0], np.full((2, 2), 200 / 255))
        assert np.array_equal(img[1:], np.zeros((2, 2, 2)))

    def test_grayscale_rejected(self, tmp_path: Path) -> None:
        """Test that non-RGB color types are rejected."""
        Image.fromarray(np.zeros((2, 2), dtype=np.uint8)).save(tmp_path / "g.png")
        with pytest.raises(ImageFormatError):
            load_image(tmp_path / "g.png")

    def test_malformed_rejected(self, tmp_path: Path) -> None:
        """Test that garbage bytes are rejected."""
        path = tmp_path / "bad.png"
        path.write_bytes(b"not an image")
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_to_uint8_clips_and_rounds(self) -> None:
        """Test quantization of out-of-range values."""
        out = to_uint8(np.array([[[-0.5, 0.5, 2.0]]] * 3))
        assert out.shape == (1, 3, 3)
        assert out[0, :, 0].tolist() == [0, 128, 255]
        with pytest.raises(ImageFormatError):
            to_uint8(np.zeros((4, 2, 2)))

    def test_list_images(self, tmp_path: Path) -> None:
        """Test that only image files are listed, in name order."""
        for name in ("b.png", "a.ppm", "notes.txt"):
            (tmp_path / name).write_bytes(b"")
        assert [p.name for p in list_images(tmp_path)] == ["a.ppm", "b.png"]
        with pytest.raises(ImageFormatError):
            list_images(tmp_path / "missing")
