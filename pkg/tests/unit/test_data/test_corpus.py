"""Tests for the procedural corpus."""

from pathlib import Path

import numpy as np
import pytest

from s3mamba.core.exceptions import DataError
from s3mamba.data.corpus import KINDS
from s3mamba.data.corpus import CorpusManifest
from s3mamba.data.corpus import procedural_corpus
from s3mamba.data.corpus import write_corpus
from s3mamba.data.imageio import load_image


class TestProceduralCorpus:
    """Test deterministic image synthesis."""

    def test_same_seed_same_images(self) -> None:
        """Test that a seed fixes every pixel and the manifest."""
        a, ma = procedural_corpus(3, 96, seed=42)
        b, mb = procedural_corpus(3, 96, seed=42)
        assert all(np.array_equal(x, y) for x, y in zip(a, b, strict=True))
        assert ma == mb

    def test_different_seed_differs(self) -> None:
        """Test that seeds matter."""
        a, _ = procedural_corpus(1, 96, seed=1)
        b, _ = procedural_corpus(1, 96, seed=2)
        assert not np.array_equal(a[0], b[0])

    def test_value_range_and_shape(self) -> None:
        """Test [3, size, size] images in [0, 1]."""
        images, _ = procedural_corpus(6, 96, seed=0)
        for img in images:
            assert img.shape == (3, 96, 96)
            assert img.min() >= 0.0 and img.max() <= 1.0

    def test_kinds_cycle(self) -> None:
        """Test that image kinds rotate through the generators."""
        _, manifest = procedural_corpus(4, 96, seed=0)
        assert [r.kind for r in manifest.images] == [KINDS[0], KINDS[1], KINDS[2], KINDS[0]]
        assert manifest.count == 4

    def test_sinusoid_spectral_peak(self) -> None:
        """Test that a sinusoid image peaks at its dominant generating frequency."""
        images, manifest = procedural_corpus(1, 96, seed=8)
        recipe = manifest.images[0]
        assert recipe.kind == "sinusoid"
        wave = recipe.params["waves"][0]
        channel = images[0][0]
        spectrum = np.abs(np.fft.fft2(channel - channel.mean()))
        peak = np.unravel_index(int(spectrum.argmax()), spectrum.shape)
        expected = {(wave["fy"] % 96, wave["fx"] % 96), (-wave["fy"] % 96, -wave["fx"] % 96)}
        assert (int(peak[0]), int(peak[1])) in expected

    def test_rejects_small_or_negative(self) -> None:
        """Test size and count validation."""
        with pytest.raises(DataError):
            procedural_corpus(1, 64, seed=0)
        with pytest.raises(DataError):
            procedural_corpus(-1, 96, seed=0)

    def test_empty_corpus(self) -> None:
        """Test that zero images give an empty manifest."""
        images, manifest = procedural_corpus(0, 96, seed=0)
        assert images == [] and manifest.count == 0


class TestWriteCorpus:
    """Test the on-disk layout."""

    def test_files_and_manifest(self, tmp_path: Path) -> None:
        """Test PNG files plus a manifest that parses back."""
        manifest = write_corpus(tmp_path / "c", 2, 96, seed=6)
        names = sorted(p.name for p in (tmp_path / "c").iterdir())
        assert names == ["0000.png", "0001.png", "manifest.json"]
        parsed = CorpusManifest.model_validate_json(
            (tmp_path / "c" / "manifest.json").read_text(encoding="utf-8")
        )
        assert parsed == manifest
        assert load_image(tmp_path / "c" / "0000.png").shape == (3, 96, 96)

    def test_byte_identical(self, tmp_path: Path) -> None:
        """Test that two writes with one seed produce identical bytes."""
        write_corpus(tmp_path / "a", 2, 96, seed=9)
        write_corpus(tmp_path / "b", 2, 96, seed=9)
        for name in ("0000.png", "0001.png", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
