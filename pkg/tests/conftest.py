"""Pytest configuration and fixtures for s3mamba tests."""

from pathlib import Path

import numpy as np
import pytest

from s3mamba.core.models import DataConfig
from s3mamba.core.models import ModelConfig
from s3mamba.core.models import RunConfig
from s3mamba.core.models import TrainConfig
from s3mamba.data.corpus import write_corpus
from s3mamba.data.rng import SplitMix64


@pytest.fixture
def rng() -> SplitMix64:
    """A fixed-seed generator."""
    return SplitMix64(1234)


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    """Smallest model that still has every component switched on."""
    return ModelConfig(
        d_model=8,
        n_state=4,
        n_resblocks=1,
        n_sssm_blocks=1,
        sigma_hidden=4,
    )


@pytest.fixture
def tiny_run_config(tiny_model_config: ModelConfig) -> RunConfig:
    """A two-epoch procedural run that finishes in seconds."""
    return RunConfig(
        data=DataConfig(
            n_images=2,
            n_val=1,
            image_size=96,
            lr_patch=8,
            scale_min=1.0,
            scale_max=2.0,
            queries_per_patch=16,
            seed=5,
        ),
        model=tiny_model_config,
        train=TrainConfig(
            epochs=2,
            batch_size=2,
            lr0=1e-3,
            save_every=1,
            val_every=1,
            val_images=1,
            val_scales=[2.0],
        ),
    )


@pytest.fixture
def small_image() -> np.ndarray:
    """A smooth 3x24x24 image in (0, 1)."""
    yy, xx = np.mgrid[0:24, 0:24] / 24.0
    return np.stack(
        [
            0.5 + 0.3 * np.sin(2 * np.pi * xx),
            0.5 + 0.3 * np.cos(2 * np.pi * yy),
            0.25 + 0.5 * xx * yy,
        ]
    )


@pytest.fixture
def corpus_dir(tmp_path: Path) -> Path:
    """A two-image procedural corpus on disk (train/ and val/)."""
    root = tmp_path / "corpus"
    write_corpus(root / "train", 2, 96, seed=3)
    write_corpus(root / "val", 1, 96, seed=4)
    return root
