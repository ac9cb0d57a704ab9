"""Controlled comparisons of decoder types and of the two feature modules."""

import csv
import statistics
from pathlib import Path
from typing import Any
from typing import Literal

from pydantic import BaseModel
from pydantic import Field

from ..config.logging import get_logger
from ..core.models import RunConfig
from ..data.pipeline import Dataset
from .trainer import Trainer
from .trainer import scale_label
from .trainer import validation_psnr

logger = get_logger(__name__)

PARAMETER_TOLERANCE = 0.10


class AblationVariant(BaseModel):
    """A named set of model switches; everything else stays fixed."""

    name: str
    decoder: Literal["mlp", "ssm", "sssm"]
    use_gfe: bool
    use_sfatt: bool

    def model_overrides(self) -> dict[str, Any]:
        return {"decoder": self.decoder, "use_gfe": self.use_gfe, "use_sfatt": self.use_sfatt}


DECODER_VARIANTS = [
    AblationVariant(name="mlp", decoder="mlp", use_gfe=True, use_sfatt=True),
    AblationVariant(name="ssm", decoder="ssm", use_gfe=True, use_sfatt=True),
    AblationVariant(name="sssm", decoder="sssm", use_gfe=True, use_sfatt=True),
]

MODULE_VARIANTS = [
    AblationVariant(name="base", decoder="sssm", use_gfe=False, use_sfatt=False),
    AblationVariant(name="+sfatt", decoder="sssm", use_gfe=False, use_sfatt=True),
    AblationVariant(name="+gfe", decoder="sssm", use_gfe=True, use_sfatt=False),
    AblationVariant(name="+gfe+sfatt", decoder="sssm", use_gfe=True, use_sfatt=True),
]


class AblationRow(BaseModel):
    """Median-over-seeds PSNR of one variant at each evaluation scale."""

    variant: str
    decoder: Literal["mlp", "ssm", "sssm"]
    use_gfe: bool
    use_sfatt: bool
    parameters: int
    param_spread: float = Field(default=0.0, description="parameters / smallest count in the grid - 1")
    psnr: dict[str, float]
    per_seed: dict[str, list[float]]


def variant_config(base: RunConfig, variant: AblationVariant, seed: int) -> RunConfig:
    """``base`` with the variant's switches and ``seed`` applied to model and data."""
    model = base.model.model_copy(update=variant.model_overrides())
    train = base.train.model_copy(update={"seed": seed})
    data = base.data.model_copy(update={"seed": seed})
    return RunConfig.model_validate(
        {
            "data": data.model_dump(),
            "model": model.model_dump(),
            "train": train.model_dump(),
            "eval": base.eval.model_dump(),
        }
    )


def run_ablation(
    base: RunConfig,
    variants: list[AblationVariant],
    seeds: list[int],
    scales: list[float],
) -> list[AblationRow]:
    """Train every variant under every seed on the same data and compare PSNR.

    The corpus for a seed is shared by all variants, so rows differ only in
    the switched components.
    """
    datasets: dict[int, Dataset] = {}
    rows: list[AblationRow] = []
    for variant in variants:
        per_seed: dict[str, list[float]] = {scale_label(s): [] for s in scales}
        parameters = 0
        for seed in seeds:
            cfg = variant_config(base, variant, seed)
            if seed not in datasets:
                datasets[seed] = Dataset.from_config(cfg.data)
            dataset = datasets[seed]
            trainer = Trainer(cfg, dataset)
            parameters = trainer.model.num_parameters()
            trainer.fit()
            scores = validation_psnr(trainer.model, dataset.val[: cfg.train.val_images], scales)
            for label, value in scores.items():
                per_seed[label].append(value)
            logger.info("ablation_run", variant=variant.name, seed=seed, **scores)
        rows.append(
            AblationRow(
                variant=variant.name,
                decoder=variant.decoder,
                use_gfe=variant.use_gfe,
                use_sfatt=variant.use_sfatt,
                parameters=parameters,
                psnr={label: statistics.median(v) for label, v in per_seed.items()},
                per_seed=per_seed,
            )
        )
    return _with_parameter_spread(rows)


def _with_parameter_spread(rows: list[AblationRow]) -> list[AblationRow]:
    """Fill each row's ``param_spread`` and log whether the grid stays within tolerance."""
    if not rows:
        return rows
    smallest = min(r.parameters for r in rows)
    rows = [
        r.model_copy(update={"param_spread": r.parameters / smallest - 1.0}) for r in rows
    ]
    spread = max(r.param_spread for r in rows)
    counts = [r.parameters for r in rows]
    if spread > PARAMETER_TOLERANCE:
        logger.warning("ablation_parameter_spread", spread=round(spread, 4), counts=counts)
    else:
        logger.info("ablation_parameter_spread", spread=round(spread, 4), counts=counts)
    return rows


def write_ablation_csv(path: Path, rows: list[AblationRow]) -> None:
    labels = list(rows[0].psnr) if rows else []
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["variant", "decoder", "use_gfe", "use_sfatt", "parameters", "param_spread"]
        writer.writerow(header + [f"psnr_{label}" for label in labels])
        for r in rows:
            writer.writerow(
                [r.variant, r.decoder, r.use_gfe, r.use_sfatt, r.parameters, f"{r.param_spread:.4f}"]
                + [f"{r.psnr[label]:.4f}" for label in labels]
            )
