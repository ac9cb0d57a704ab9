"""Tests for the CLI module."""

import csv
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from typer.testing import CliRunner

from s3mamba.cli import EFFECTIVE_CONFIG
from s3mamba.cli import app
from s3mamba.cli import parse_floats
from s3mamba.core.exceptions import DivergenceError
from s3mamba.core.models import RunConfig
from s3mamba.data.imageio import load_image
from s3mamba.data.imageio import save_image
from s3mamba.training.trainer import Trainer
from s3mamba.verify.oracles import CheckResult


@pytest.fixture
def config_file(tmp_path: Path, tiny_run_config: RunConfig) -> Path:
    """A one-epoch run configuration without full-image validation."""
    cfg = tiny_run_config.model_copy(deep=True)
    cfg.train.epochs = 1
    cfg.train.val_images = 0
    path = tmp_path / "run.json"
    path.write_text(cfg.model_dump_json(), encoding="utf-8")
    return path


class TestCLI:
    """Test CLI functionality."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.runner = CliRunner()

    def test_version_command(self) -> None:
        """Test version command."""
        with patch("s3mamba.cli.settings") as mock_settings:
            mock_settings.version = "1.0.0"
            result = self.runner.invoke(app, ["version"])
            assert result.exit_code == 0
            assert "s3mamba version 1.0.0" in result.stdout

    def test_config_command(self) -> None:
        """Test config command."""
        result = self.runner.invoke(app, ["config"])
        assert result.exit_code == 0
        assert "Environment" in result.stdout
        assert "Bench Ratio Limit" in result.stdout

    def test_config_command_with_run_config(self, config_file: Path) -> None:
        """Test that a run configuration is echoed with defaults."""
        result = self.runner.invoke(app, ["config", "--run-config", str(config_file)])
        assert result.exit_code == 0
        assert "queries_per_patch" in result.stdout

    def test_parse_floats(self) -> None:
        """Test the scale list parser."""
        assert parse_floats("2,3.5, 4") == [2.0, 3.5, 4.0]


class TestGenData:
    """Test corpus generation."""

    def setup_method(self) -> None:
        self.runner = CliRunner()

    def test_byte_identical(self, tmp_path: Path) -> None:
        """Test that the same seed writes identical files."""
        for name in ("a", "b"):
            result = self.runner.invoke(
                app, ["gen-data", "--out", str(tmp_path / name), "--n", "2", "--seed", "5"]
            )
            assert result.exit_code == 0, result.stdout
        for file in ("0000.png", "0001.png", "manifest.json"):
            a = (tmp_path / "a" / "train" / file).read_bytes()
            assert a == (tmp_path / "b" / "train" / file).read_bytes()

    def test_validation_split(self, tmp_path: Path) -> None:
        """Test that --n-val writes a differently seeded val/ directory."""
        result = self.runner.invoke(
            app, ["gen-data", "--out", str(tmp_path), "--n", "1", "--n-val", "1"]
        )
        assert result.exit_code == 0
        train = load_image(tmp_path / "train" / "0000.png")
        val = load_image(tmp_path / "val" / "0000.png")
        assert not np.array_equal(train, val)

    def test_empty_corpus(self, tmp_path: Path) -> None:
        """Test that n = 0 writes only a manifest."""
        result = self.runner.invoke(app, ["gen-data", "--out", str(tmp_path), "--n", "0"])
        assert result.exit_code == 0
        assert [p.name for p in (tmp_path / "train").iterdir()] == ["manifest.json"]

    def test_small_size_is_usage_error(self, tmp_path: Path) -> None:
        """Test that sizes below the minimum exit with code 2."""
        result = self.runner.invoke(app, ["gen-data", "--out", str(tmp_path), "--size", "32"])
        assert result.exit_code == 2


class TestTrainCommand:
    """Test training from the command line."""

    def setup_method(self) -> None:
        self.runner = CliRunner()

    def test_missing_config(self, tmp_path: Path) -> None:
        """Test that a missing config file exits with code 2 and names the path."""
        missing = tmp_path / "nope.json"
        result = self.runner.invoke(app, ["train", "--config", str(missing)])
        assert result.exit_code == 2
        assert "nope.json" in result.stdout.replace("\n", "")

    def test_invalid_config(self, tmp_path: Path) -> None:
        """Test that unknown keys exit with code 2."""
        path = tmp_path / "bad.json"
        path.write_text('{"train": {"epoch": 3}}', encoding="utf-8")
        result = self.runner.invoke(app, ["train", "--config", str(path)])
        assert result.exit_code == 2

    def test_missing_resume_checkpoint(self, tmp_path: Path, config_file: Path) -> None:
        """Test that an absent checkpoint exits with code 2."""
        result = self.runner.invoke(
            app, ["train", "--config", str(config_file), "--resume", str(tmp_path / "x.s3mb")]
        )
        assert result.exit_code == 2

    def test_zero_epochs(self, tmp_path: Path, tiny_run_config: RunConfig) -> None:
        """Test that a zero-epoch run succeeds and leaves only the log header."""
        cfg = tiny_run_config.model_copy(deep=True)
        cfg.train.epochs = 0
        path = tmp_path / "zero.json"
        path.write_text(cfg.model_dump_json(), encoding="utf-8")
        run = tmp_path / "run"
        result = self.runner.invoke(app, ["train", "--config", str(path), "--out", str(run)])
        assert result.exit_code == 0, result.stdout
        assert "no epochs" in result.stdout
        assert (run / "train_log.csv").read_text(encoding="utf-8") == "epoch,loss,psnr_x2,lr\n"
        assert not list(run.glob("*.s3mb"))

    def test_divergence_exit_code(self, tmp_path: Path, config_file: Path) -> None:
        """Test that divergence exits with code 3."""
        error = DivergenceError("non-finite training loss", epoch=0, step=0, sample_seed=7)
        with patch.object(Trainer, "fit", side_effect=error):
            result = self.runner.invoke(
                app, ["train", "--config", str(config_file), "--out", str(tmp_path / "run")]
            )
        assert result.exit_code == 3
        assert "non-finite" in result.stdout

    def test_train_eval_upscale(self, tmp_path: Path, config_file: Path, corpus_dir: Path) -> None:
        """Test a one-epoch run, then evaluation and upscaling with its checkpoint."""
        run = tmp_path / "run"
        result = self.runner.invoke(
            app, ["train", "--config", str(config_file), "--out", str(run), "--float32"]
        )
        assert result.exit_code == 0, result.stdout
        assert (run / "ckpt_0001.s3mb").is_file()
        assert (run / "ckpt_0001_f32.s3mb").is_file()
        assert (run / "train_log.csv").is_file()
        effective = RunConfig.model_validate_json((run / EFFECTIVE_CONFIG).read_text("utf-8"))
        assert effective.train.epochs == 1

        report = tmp_path / "report" / "eval.csv"
        result = self.runner.invoke(
            app,
            [
                "eval",
                "--ckpt",
                str(run / "ckpt_0001.s3mb"),
                "--corpus",
                str(corpus_dir),
                "--scales",
                "2",
                "--out",
                str(report),
            ],
        )
        assert result.exit_code == 0, result.stdout
        with report.open(encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert [(r["scale"], r["method"]) for r in rows] == [("2", "s3mamba"), ("2", "bicubic")]
        assert (report.parent / EFFECTIVE_CONFIG).is_file()

        src = tmp_path / "in.png"
        save_image(src, np.full((3, 5, 4), 0.5))
        result = self.runner.invoke(
            app,
            [
                "upscale",
                "--ckpt",
                str(run / "ckpt_0001.s3mb"),
                "--in",
                str(src),
                "--scale",
                "2.5",
                "--out",
                str(tmp_path / "out.png"),
            ],
        )
        assert result.exit_code == 0, result.stdout
        assert load_image(tmp_path / "out.png").shape == (3, 12, 10)


class TestOtherCommands:
    """Test eval, upscale, verify, bench-scan and ablate argument handling."""

    def setup_method(self) -> None:
        self.runner = CliRunner()

    @pytest.mark.parametrize("scales", ["2,-1", "0", "abc"])
    def test_eval_bad_scales(self, tmp_path: Path, scales: str) -> None:
        """Test that invalid scale lists exit with code 2."""
        result = self.runner.invoke(
            app,
            ["eval", "--ckpt", str(tmp_path / "c"), "--corpus", str(tmp_path), "--scales", scales],
        )
        assert result.exit_code == 2

    def test_eval_missing_checkpoint(self, tmp_path: Path) -> None:
        """Test that an absent checkpoint exits with code 2."""
        result = self.runner.invoke(
            app, ["eval", "--ckpt", str(tmp_path / "c.s3mb"), "--corpus", str(tmp_path)]
        )
        assert result.exit_code == 2

    def test_upscale_corrupt_checkpoint(self, tmp_path: Path) -> None:
        """Test that a file without the archive magic exits with code 2."""
        ckpt = tmp_path / "c.s3mb"
        ckpt.write_bytes(b"not a checkpoint at all")
        image = tmp_path / "i.png"
        save_image(image, np.full((3, 4, 4), 0.5))
        result = self.runner.invoke(
            app,
            [
                "upscale",
                "--ckpt",
                str(ckpt),
                "--in",
                str(image),
                "--scale",
                "2",
                "--out",
                str(tmp_path / "o.png"),
            ],
        )
        assert result.exit_code == 2

    def test_upscale_bad_scale(self, tmp_path: Path) -> None:
        """Test that a non-positive scale exits with code 2."""
        result = self.runner.invoke(
            app,
            [
                "upscale",
                "--ckpt",
                str(tmp_path / "c"),
                "--in",
                str(tmp_path / "i.png"),
                "--scale",
                "0",
                "--out",
                str(tmp_path / "o.png"),
            ],
        )
        assert result.exit_code == 2

    def test_verify_failure_exit_code(self) -> None:
        """Test that a failing check exits with code 1 and is named."""
        results = [
            CheckResult(name="zoh_oracle", passed=False, seconds=0.1, detail="max rel err 1e-06"),
            CheckResult(name="metrics", passed=True, seconds=0.1, detail="ok"),
        ]
        with patch("s3mamba.cli.run_checks", return_value=results) as mock_run:
            result = self.runner.invoke(app, ["verify", "--inject-abar-error", "1e-6"])
        assert result.exit_code == 1
        assert "zoh_oracle" in result.stdout
        mock_run.assert_called_once_with(inject_abar_error=1e-6, quick=False)

    def test_verify_success(self) -> None:
        """Test that passing checks exit with code 0."""
        results = [CheckResult(name="metrics", passed=True, seconds=0.1, detail="ok")]
        with patch("s3mamba.cli.run_checks", return_value=results):
            result = self.runner.invoke(app, ["verify", "--quick"])
        assert result.exit_code == 0
        assert "all 1 checks passed" in result.stdout

    def test_bench_not_ascending(self) -> None:
        """Test that unsorted lengths exit with code 2."""
        result = self.runner.invoke(app, ["bench-scan", "--lengths", "2048,1024"])
        assert result.exit_code == 2

    def test_bench_writes_csv(self, tmp_path: Path) -> None:
        """Test a tiny benchmark run."""
        with patch("s3mamba.verify.bench.settings") as mock_settings:
            mock_settings.bench_ratio_limit = 1e9
            result = self.runner.invoke(
                app,
                ["bench-scan", "--lengths", "16,64", "--repeat", "1", "--out", str(tmp_path / "b.csv")],
            )
        assert result.exit_code == 0, result.stdout
        lines = (tmp_path / "b.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "impl,length,median_ms"
        assert len(lines) == 5

    def test_ablate_unknown_grid(self) -> None:
        """Test that an unknown grid exits with code 2."""
        result = self.runner.invoke(app, ["ablate", "--grid", "everything"])
        assert result.exit_code == 2
