"""Configuration and report models for s3mamba."""

import math
from pathlib import Path
from typing import Literal
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:
    from typing_extensions import Self

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator

from .exceptions import ConfigurationError

MAX_SEED = 2**64 - 1


class StrictModel(BaseModel):
    """Base for run configuration sections: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class DataConfig(StrictModel):
    """Dataset synthesis and patch sampling."""

    source: str = Field(
        default="procedural",
        description="'procedural' or a corpus directory with train/ and val/",
    )
    n_images: int = Field(default=32, ge=0, description="Procedural train images")
    n_val: int = Field(default=8, ge=0, description="Procedural held-out images")
    image_size: int = Field(default=96, ge=96, description="Procedural image side")
    lr_patch: int = Field(default=24, ge=1, description="LR patch side p")
    scale_min: float = Field(default=1.0, ge=1.0)
    scale_max: float = Field(default=4.0, ge=1.0)
    queries_per_patch: int = Field(default=64, ge=1)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    augment: bool = Field(default=False, description="Random flips and transposes")

    @model_validator(mode="after")
    def validate_scale_range(self) -> Self:
        if self.scale_min > self.scale_max:
            raise ValueError("scale_min must not exceed scale_max")
        if self.is_procedural and self.lr_patch * self.scale_max > self.image_size:
            raise ValueError(
                f"lr_patch * scale_max = {self.lr_patch * self.scale_max} exceeds "
                f"image_size = {self.image_size}"
            )
        return self

    @property
    def is_procedural(self) -> bool:
        """Whether the corpus is synthesized instead of read from disk."""
        return self.source == "procedural"

    @property
    def source_dir(self) -> Path:
        """Corpus directory for file-backed sources."""
        if self.is_procedural:
            raise ConfigurationError("procedural source has no directory")
        return Path(self.source)


class BlockConfig(StrictModel):
    """Widths of one SSSM block."""

    d_model: int = Field(ge=1)
    d_inner: int = Field(ge=1)
    n_state: int = Field(ge=1)
    directions: Literal[4] = 4

    @model_validator(mode="after")
    def validate_expansion(self) -> Self:
        if self.d_inner < self.d_model:
            raise ValueError("d_inner must be at least d_model")
        return self


class ModelConfig(StrictModel):
    """Network widths and the ablation switches."""

    d_model: int = Field(default=32, ge=1)
    d_inner: int | None = Field(default=None, description="Defaults to 2 * d_model")
    n_state: int = Field(default=8, ge=1)
    dt_rank: int | None = Field(default=None, description="Defaults to ceil(d_inner/16)")
    sigma_hidden: int = Field(default=16, ge=1)
    n_resblocks: int = Field(default=4, ge=0)
    n_sssm_blocks: int = Field(default=2, ge=0)
    decoder: Literal["mlp", "ssm", "sssm"] = Field(
        default="sssm", description="Only 'sssm' gives the scan layers scale heads"
    )
    scan_method: Literal["sequential", "blocked"] = Field(
        default="blocked", description="Recurrence evaluation order (same result to rounding)"
    )
    use_gfe: bool = True
    use_sfatt: bool = True
    local_ensemble: bool = False
    residual_bicubic: bool = False

    @model_validator(mode="after")
    def validate_widths(self) -> Self:
        if self.d_inner is not None and self.d_inner < self.d_model:
            raise ValueError("d_inner must be at least d_model")
        return self

    @property
    def inner_width(self) -> int:
        """Effective expansion width."""
        return self.d_inner if self.d_inner is not None else 2 * self.d_model

    @property
    def rank(self) -> int:
        """Effective low rank of the step-size projection."""
        if self.dt_rank is not None:
            return self.dt_rank
        return max(1, math.ceil(self.inner_width / 16))

    def block_config(self) -> BlockConfig:
        """Widths used by every SSSM block of this model."""
        return BlockConfig(
            d_model=self.d_model, d_inner=self.inner_width, n_state=self.n_state
        )


class TrainConfig(StrictModel):
    """Optimization schedule."""

    epochs: int = Field(default=100, ge=0, description="0 leaves the model untouched")
    batch_size: int = Field(default=8, ge=1)
    lr0: float = Field(default=1e-4, gt=0.0)
    decay_factor: float = Field(default=0.5, gt=0.0, le=1.0)
    decay_epochs: int = Field(default=20, ge=1)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    samples_per_epoch: int | None = Field(
        default=None, ge=1, description="Defaults to the number of train images"
    )
    save_every: int = Field(default=10, ge=1)
    val_every: int = Field(default=10, ge=1)
    val_scales: list[float] = Field(default_factory=lambda: [2.0, 3.0])
    val_images: int = Field(default=8, ge=0)

    @field_validator("val_scales")
    @classmethod
    def validate_val_scales(cls, v: list[float]) -> list[float]:
        if any(s <= 0 for s in v):
            raise ValueError("val_scales must be positive")
        return v

    def lr_at(self, epoch: int) -> float:
        """Step-decayed learning rate for a zero-based epoch index."""
        return self.lr0 * self.decay_factor ** (epoch // self.decay_epochs)


class EvalConfig(StrictModel):
    """Evaluation protocol."""

    scales: list[float] = Field(default_factory=lambda: [2.0, 3.0, 3.5, 4.0, 6.0])
    shave: int | None = Field(
        default=None, ge=0, description="Border pixels; defaults to ceil(scale)"
    )

    @field_validator("scales")
    @classmethod
    def validate_scales(cls, v: list[float]) -> list[float]:
        if not v or any(s <= 0 for s in v):
            raise ValueError("scales must be a non-empty list of positive values")
        return v


class RunConfig(StrictModel):
    """Complete configuration of one run."""

    data: DataConfig = Field(default_factory=DataConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)


class MetricReport(BaseModel):
    """Image quality of one prediction against its ground truth."""

    psnr_rgb: float = Field(ge=0.0)
    psnr_y: float = Field(ge=0.0)
    ssim: float = Field(ge=-1.0, le=1.0)
    shave: int = Field(ge=0)
