"""Tests for patch sampling and the dataset."""

from pathlib import Path

import numpy as np
import pytest

from s3mamba.core.exceptions import DataError
from s3mamba.core.exceptions import SourceTooSmallError
from s3mamba.core.models import DataConfig
from s3mamba.data.pipeline import Dataset
from s3mamba.data.pipeline import QueryBatch
from s3mamba.data.pipeline import cell_centers
from s3mamba.data.pipeline import make_eval_pair
from s3mamba.data.pipeline import make_sample
from s3mamba.data.pipeline import sample_seed
from s3mamba.data.rng import SplitMix64


@pytest.fixture
def source() -> np.ndarray:
    """A 48x48 random RGB source image."""
    return SplitMix64(99).uniform_array((3, 48, 48))


class TestCellCenters:
    """Test normalized pixel-center coordinates."""

    def test_two_by_two(self) -> None:
        """Test the raster order and the centers of a 2x2 grid."""
        expected = [[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]]
        assert cell_centers(2, 2).tolist() == expected

    def test_inside_unit_square(self) -> None:
        """Test that every center lies strictly inside [-1, 1]."""
        c = cell_centers(7, 3)
        assert c.shape == (21, 2)
        assert np.all(np.abs(c) < 1.0)


class TestMakeSample:
    """Test training pair synthesis."""

    def test_unit_scale_is_identity(self, source: np.ndarray) -> None:
        """Test that s = 1 gives an LR patch equal to its GT crop."""
        cfg = DataConfig(lr_patch=12, scale_min=1.0, scale_max=1.0, queries_per_patch=8)
        pair = make_sample(source, cfg, SplitMix64(0))
        assert pair.scale == 1.0
        assert np.abs(pair.lr - pair.gt).max() < 1e-12

    def test_deterministic(self, source: np.ndarray) -> None:
        """Test that one seed gives a bit-identical pair."""
        cfg = DataConfig(lr_patch=8, scale_max=4.0)
        a = make_sample(source, cfg, SplitMix64(5))
        b = make_sample(source, cfg, SplitMix64(5))
        assert np.array_equal(a.lr, b.lr)
        assert np.array_equal(a.query.coords, b.query.coords)
        assert a.query.targets is not None and b.query.targets is not None
        assert np.array_equal(a.query.targets, b.query.targets)

    def test_queries_index_gt_pixels(self, source: np.ndarray) -> None:
        """Test coordinate bounds and targets over many draws."""
        cfg = DataConfig(lr_patch=8, scale_max=4.0, queries_per_patch=16)
        rng = SplitMix64(6)
        for _ in range(300):
            pair = make_sample(source, cfg, rng)
            size = pair.gt.shape[1]
            coords = pair.query.coords
            assert np.all(np.abs(coords) <= 1.0)
            rows = np.floor((coords[:, 0] + 1.0) * 0.5 * size).astype(int)
            cols = np.floor((coords[:, 1] + 1.0) * 0.5 * size).astype(int)
            assert np.array_equal(pair.query.targets, pair.gt[:, rows, cols].T)
            flat = rows * size + cols
            assert np.all(np.diff(flat) > 0)

    def test_realized_scale(self, source: np.ndarray) -> None:
        """Test that the recorded scale is the crop side over the patch side."""
        cfg = DataConfig(lr_patch=8, scale_min=1.0, scale_max=4.0)
        rng = SplitMix64(7)
        for _ in range(50):
            pair = make_sample(source, cfg, rng)
            assert pair.lr.shape == (3, 8, 8)
            assert pair.scale == pair.gt.shape[1] / 8
            assert 1.0 <= pair.scale <= 4.0
            assert pair.lr.min() >= 0.0 and pair.lr.max() <= 1.0

    def test_source_too_small(self) -> None:
        """Test that a source smaller than the crop is an error."""
        cfg = DataConfig(lr_patch=24, scale_min=2.0, scale_max=2.0)
        with pytest.raises(SourceTooSmallError):
            make_sample(np.zeros((3, 40, 40)), cfg, SplitMix64(0))


class TestQueryBatch:
    """Test query validation."""

    def test_rejects_empty_and_mismatched(self) -> None:
        """Test empty coordinates and wrongly sized targets."""
        with pytest.raises(DataError):
            QueryBatch(np.zeros((0, 2)), 2.0)
        with pytest.raises(DataError):
            QueryBatch(np.zeros((3, 2)), 2.0, targets=np.zeros((2, 3)))


class TestEvalPair:
    """Test evaluation LR/GT pairs."""

    @pytest.mark.parametrize(
        ("shape", "scale", "lr_shape", "gt_shape"),
        [((10, 10), 3.0, (3, 3), (9, 9)), ((10, 8), 2.5, (4, 3), (10, 7)), ((9, 9), 1.0, (9, 9), (9, 9))],
    )
    def test_sizes(
        self,
        shape: tuple[int, int],
        scale: float,
        lr_shape: tuple[int, int],
        gt_shape: tuple[int, int],
    ) -> None:
        """Test that the GT crop matches the prediction grid of the LR image."""
        lr, gt = make_eval_pair(np.full((3, *shape), 0.5), scale)
        assert lr.shape[1:] == lr_shape
        assert gt.shape[1:] == gt_shape
        assert np.allclose(lr, 0.5)

    def test_rejects_scale(self) -> None:
        """Test that non-positive scales are rejected."""
        with pytest.raises(DataError):
            make_eval_pair(np.zeros((3, 4, 4)), 0.0)


class TestDataset:
    """Test corpus loading and the seeded epoch stream."""

    def test_procedural_split(self) -> None:
        """Test the train/val split of the synthesized corpus."""
        ds = Dataset.from_config(DataConfig(n_images=2, n_val=1, lr_patch=8, seed=1))
        assert len(ds.train) == 2 and len(ds.val) == 1

    def test_directory_source(self, corpus_dir: Path) -> None:
        """Test reading train/ and val/ from disk."""
        ds = Dataset.from_config(DataConfig(source=str(corpus_dir), lr_patch=8))
        assert len(ds.train) == 2 and len(ds.val) == 1
        assert ds.train[0].shape == (3, 96, 96)

    def test_from_directory_prefers_val(self, corpus_dir: Path) -> None:
        """Test that evaluation reads val/ when present."""
        ds = Dataset.from_directory(corpus_dir, DataConfig(lr_patch=8))
        assert len(ds.val) == 1

    def test_from_directory_empty(self, tmp_path: Path) -> None:
        """Test that an empty directory is an error."""
        with pytest.raises(DataError):
            Dataset.from_directory(tmp_path, DataConfig(lr_patch=8))

    def test_empty_train_split(self) -> None:
        """Test that a dataset needs training images."""
        with pytest.raises(DataError):
            Dataset([], [], DataConfig())

    def test_epoch_stream_is_pure(self) -> None:
        """Test that samples depend only on (seed, epoch, index)."""
        cfg = DataConfig(n_images=3, n_val=0, lr_patch=8, seed=4)
        ds = Dataset.from_config(cfg)
        first = list(ds.epoch_samples(2, count=5))
        again = list(Dataset.from_config(cfg).epoch_samples(2, count=5))
        assert [s for s, _ in first] == [sample_seed(4, 2, i) for i in range(5)]
        assert [s for s, _ in again] == [s for s, _ in first]
        for (_, a), (_, b) in zip(first, again, strict=True):
            assert np.array_equal(a.lr, b.lr)

    def test_epoch_order_is_permutation(self) -> None:
        """Test that each epoch visits every training image once."""
        ds = Dataset.from_config(DataConfig(n_images=4, n_val=0, lr_patch=8, seed=4))
        assert sorted(ds.epoch_order(0)) == [0, 1, 2, 3]
        assert len(list(ds.epoch_samples(0))) == 4
