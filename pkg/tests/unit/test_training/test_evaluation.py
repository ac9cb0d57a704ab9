"""Tests for per-scale evaluation."""

from pathlib import Path

import numpy as np

from s3mamba.core.models import ModelConfig
from s3mamba.nn.model import S3Mamba
from s3mamba.training.evaluation import EVAL_COLUMNS
from s3mamba.training.evaluation import EvalRow
from s3mamba.training.evaluation import bicubic_upscale
from s3mamba.training.evaluation import consistency_probe
from s3mamba.training.evaluation import evaluate_model
from s3mamba.training.evaluation import scale_regime
from s3mamba.training.evaluation import write_eval_csv


class TestEvaluateModel:
    """Test model and baseline rows."""

    def test_rows_per_scale(self, tiny_model_config: ModelConfig, small_image: np.ndarray) -> None:
        """Test one model row and one bicubic row per scale."""
        model = S3Mamba(tiny_model_config, seed=0)
        rows = evaluate_model(model, [small_image], [2.0, 3.0], scale_max=2.0)
        assert [(r.scale, r.method) for r in rows] == [
            (2.0, "s3mamba"),
            (2.0, "bicubic"),
            (3.0, "s3mamba"),
            (3.0, "bicubic"),
        ]
        # an untrained model predicts flat gray, which bicubic beats on a smooth image
        assert rows[1].psnr_rgb > rows[0].psnr_rgb
        assert all(-1.0 <= r.ssim <= 1.0 for r in rows)

    def test_bicubic_upscale_clipped(self) -> None:
        """Test the baseline output size and range."""
        lr = np.zeros((3, 4, 4))
        lr[:, 1:3, 1:3] = 1.0
        out = bicubic_upscale(lr, 8, 8)
        assert out.shape == (3, 8, 8)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_scale_regime(self) -> None:
        assert scale_regime(4.0, 4.0) == "in-scale"
        assert scale_regime(6.0, 4.0) == "out-of-scale"


class TestConsistencyProbe:
    """Test cross-scale agreement."""

    def test_reference_scale_agrees_with_itself(
        self, tiny_model_config: ModelConfig, small_image: np.ndarray
    ) -> None:
        """Test that the reference scale scores the PSNR cap."""
        model = S3Mamba(tiny_model_config, seed=0)
        rows = consistency_probe(model, [small_image], [2.0, 3.0])
        assert [r.scale for r in rows] == [2.0, 3.0]
        assert rows[0].psnr == 99.0


class TestEvalCsv:
    """Test the results file."""

    def test_format(self, tmp_path: Path) -> None:
        """Test the header and number formatting."""
        rows = [
            EvalRow(scale=3.5, method="s3mamba", psnr_rgb=30.123456, psnr_y=31.5, ssim=0.9),
            EvalRow(scale=2.0, method="bicubic", psnr_rgb=28.0, psnr_y=29.0, ssim=0.85),
        ]
        write_eval_csv(tmp_path / "out" / "eval.csv", rows)
        lines = (tmp_path / "out" / "eval.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(EVAL_COLUMNS)
        assert lines[1] == "3.5,s3mamba,30.1235,31.5000,0.900000"
        assert lines[2] == "2,bicubic,28.0000,29.0000,0.850000"
