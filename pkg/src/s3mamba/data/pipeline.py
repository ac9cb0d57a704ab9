"""Random-scale training pairs and the deterministic per-epoch sample stream."""

import math
from collections.abc import Iterator
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..config.logging import get_logger
from ..core.exceptions import DataError
from ..core.exceptions import SourceTooSmallError
from ..core.models import DataConfig
from .corpus import procedural_corpus
from .imageio import list_images
from .imageio import load_image
from .resample import bicubic_resample
from .rng import SplitMix64
from .rng import derive_seed

logger = get_logger(__name__)

Array = NDArray[np.float64]


def cell_centers(height: int, width: int) -> Array:
    """Cell centers of an ``H x W`` grid in ``[-1, 1]``, row-major ``[H*W, 2]``."""
    rows = -1.0 + (2.0 * np.arange(height) + 1.0) / height
    cols = -1.0 + (2.0 * np.arange(width) + 1.0) / width
    return np.stack(np.meshgrid(rows, cols, indexing="ij"), axis=-1).reshape(-1, 2)


class QueryBatch:
    """HR query coordinates, the magnification and (for training) their RGB targets."""

    def __init__(self, coords: Array, scale: float, targets: Array | None = None) -> None:
        if coords.ndim != 2 or coords.shape[1] != 2 or coords.shape[0] < 1:
            raise DataError(f"queries must be a non-empty [Q, 2] array, got {coords.shape}")
        if targets is not None and targets.shape != (coords.shape[0], 3):
            raise DataError(f"targets must be [{coords.shape[0]}, 3], got {targets.shape}")
        self.coords = coords
        self.scale = scale
        self.targets = targets

    def __len__(self) -> int:
        return self.coords.shape[0]


class SamplePair:
    """One training example: an LR patch and queries into its GT crop."""

    def __init__(self, lr: Array, query: QueryBatch, gt: Array) -> None:
        self.lr = lr
        self.query = query
        self.gt = gt

    @property
    def scale(self) -> float:
        return self.query.scale


def _augment(gt: Array, rng: SplitMix64) -> Array:
    if rng.uniform() < 0.5:
        gt = gt[:, :, ::-1]
    if rng.uniform() < 0.5:
        gt = gt[:, ::-1, :]
    if rng.uniform() < 0.5:
        gt = gt.transpose(0, 2, 1)
    return np.ascontiguousarray(gt)


def make_sample(source: Array, cfg: DataConfig, rng: SplitMix64) -> SamplePair:
    """Draw a scale, crop a GT window of ``floor(p*s)`` pixels and downsample it to ``p``.

    The recorded scale is the realized ratio ``gt_size / p``, so the query grid
    and the LR patch describe exactly the same area. Query pixels are distinct
    and sorted in raster order.
    """
    p = cfg.lr_patch
    s = rng.uniform(cfg.scale_min, cfg.scale_max)
    gt_size = max(p, math.floor(p * s + 1e-9))
    _, height, width = source.shape
    if height < gt_size or width < gt_size:
        raise SourceTooSmallError(
            f"{height}x{width} source cannot hold a {gt_size}x{gt_size} crop (scale {s:.3f})"
        )
    top = rng.randbelow(height - gt_size + 1)
    left = rng.randbelow(width - gt_size + 1)
    gt = source[:, top : top + gt_size, left : left + gt_size]
    if cfg.augment:
        gt = _augment(gt, rng)
    lr = np.clip(bicubic_resample(gt, p, p), 0.0, 1.0)

    n_pixels = gt_size * gt_size
    picked = np.sort(np.asarray(rng.choice(n_pixels, min(cfg.queries_per_patch, n_pixels))))
    rows, cols = np.divmod(picked, gt_size)
    coords = cell_centers(gt_size, gt_size)[picked]
    targets = gt[:, rows, cols].T.copy()
    return SamplePair(lr, QueryBatch(coords, gt_size / p, targets), np.ascontiguousarray(gt))


def sample_seed(seed: int, epoch: int, index: int) -> int:
    """Seed of sample ``index`` in ``epoch``."""
    return derive_seed(seed, epoch, index)


def make_eval_pair(gt: Array, scale: float) -> tuple[Array, Array]:
    """``(lr, gt_cropped)`` for evaluating at ``scale``.

    The GT is cropped to ``floor(floor(H/s) * s)`` so the prediction grid of
    the LR image lines up with it exactly.
    """
    if scale <= 0:
        raise DataError(f"scale must be positive, got {scale}")
    _, height, width = gt.shape
    lr_h = max(1, math.floor(height / scale + 1e-9))
    lr_w = max(1, math.floor(width / scale + 1e-9))
    gt_h = max(1, math.floor(lr_h * scale + 1e-9))
    gt_w = max(1, math.floor(lr_w * scale + 1e-9))
    cropped = gt[:, :gt_h, :gt_w]
    lr = np.clip(bicubic_resample(cropped, lr_h, lr_w), 0.0, 1.0)
    return lr, cropped


class Dataset:
    """Training and validation images plus the seeded sample stream over them."""

    def __init__(self, train: list[Array], val: list[Array], cfg: DataConfig) -> None:
        if not train:
            raise DataError("training split is empty")
        self.train = train
        self.val = val
        self.cfg = cfg

    @classmethod
    def from_config(cls, cfg: DataConfig) -> "Dataset":
        """Synthesize the procedural corpus or read ``<source>/{train,val}``."""
        if cfg.is_procedural:
            images, _ = procedural_corpus(cfg.n_images + cfg.n_val, cfg.image_size, cfg.seed)
            return cls(images[: cfg.n_images], images[cfg.n_images :], cfg)
        root = cfg.source_dir
        train = [load_image(p) for p in list_images(root / "train")]
        val_dir = root / "val"
        val = [load_image(p) for p in list_images(val_dir)] if val_dir.is_dir() else []
        logger.info("corpus_loaded", source=str(root), train=len(train), val=len(val))
        return cls(train, val, cfg)

    @classmethod
    def from_directory(cls, directory: Path, cfg: DataConfig) -> "Dataset":
        """Evaluation corpus: every image in ``directory`` (or its ``val/``) as validation."""
        target = directory / "val" if (directory / "val").is_dir() else directory
        images = [load_image(p) for p in list_images(target)]
        if not images:
            raise DataError(f"no images found in {target}")
        return cls(images, images, cfg)

    def epoch_order(self, epoch: int) -> list[int]:
        """Shuffled image order for ``epoch``."""
        return SplitMix64(derive_seed(self.cfg.seed, epoch)).permutation(len(self.train))

    def epoch_samples(self, epoch: int, count: int | None = None) -> Iterator[tuple[int, SamplePair]]:
        """``(sample_seed, pair)`` for every sample of ``epoch``, in a fixed order."""
        order = self.epoch_order(epoch)
        total = len(self.train) if count is None else count
        for index in range(total):
            seed = sample_seed(self.cfg.seed, epoch, index)
            source = self.train[order[index % len(order)]]
            yield seed, make_sample(source, self.cfg, SplitMix64(seed))
