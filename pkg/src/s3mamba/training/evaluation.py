"""Per-scale benchmark of a trained model against the bicubic baseline."""

import csv
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel

from ..config.logging import get_logger
from ..data.pipeline import make_eval_pair
from ..data.resample import bicubic_resample
from ..metrics.quality import default_shave
from ..metrics.quality import evaluate
from ..metrics.quality import psnr
from ..nn.model import S3Mamba

logger = get_logger(__name__)

Array = NDArray[np.float64]
Method = Literal["s3mamba", "bicubic"]

EVAL_COLUMNS = ("scale", "method", "psnr_rgb", "psnr_y", "ssim")


class EvalRow(BaseModel):
    """Mean metrics of one method at one scale."""

    scale: float
    method: Method
    psnr_rgb: float
    psnr_y: float
    ssim: float


class ConsistencyRow(BaseModel):
    """Agreement of the prediction at ``scale`` with the reference-scale prediction."""

    scale: float
    psnr: float


def bicubic_upscale(lr: Array, out_h: int, out_w: int) -> Array:
    return np.clip(bicubic_resample(lr, out_h, out_w), 0.0, 1.0)


def scale_regime(scale: float, scale_max: float) -> str:
    """``in-scale`` inside the training range, ``out-of-scale`` beyond it."""
    return "in-scale" if scale <= scale_max + 1e-9 else "out-of-scale"


def evaluate_model(
    model: S3Mamba,
    images: list[Array],
    scales: list[float],
    shave: int | None = None,
    scale_max: float | None = None,
) -> list[EvalRow]:
    """Model and bicubic rows for every scale, averaged over ``images``.

    ``scale_max`` is the upper end of the training range; rows beyond it are
    logged as out-of-scale.
    """
    rows: list[EvalRow] = []
    for scale in scales:
        reports: dict[Method, list[tuple[float, float, float]]] = {"s3mamba": [], "bicubic": []}
        for gt in images:
            lr, target = make_eval_pair(gt, scale)
            height, width = target.shape[1:]
            predictions: dict[Method, Array] = {
                "s3mamba": model.upscale(lr, scale),
                "bicubic": bicubic_upscale(lr, height, width),
            }
            for method, pred in predictions.items():
                r = evaluate(pred, target, scale, shave)
                reports[method].append((r.psnr_rgb, r.psnr_y, r.ssim))
        for method, values in reports.items():
            mean = np.mean(values, axis=0)
            row = EvalRow(
                scale=scale,
                method=method,
                psnr_rgb=float(mean[0]),
                psnr_y=float(mean[1]),
                ssim=float(mean[2]),
            )
            rows.append(row)
            logger.info(
                "eval_row",
                scale=scale,
                method=method,
                regime=scale_regime(scale, scale_max) if scale_max is not None else "unknown",
                psnr_rgb=round(row.psnr_rgb, 4),
            )
    return rows


def consistency_probe(
    model: S3Mamba, images: list[Array], scales: list[float]
) -> list[ConsistencyRow]:
    """PSNR between each scale's output and the first scale's output resampled to it."""
    reference_scale = scales[0]
    rows = []
    for scale in scales:
        values = []
        for gt in images:
            lr, _ = make_eval_pair(gt, reference_scale)
            reference = model.upscale(lr, reference_scale)
            out = model.upscale(lr, scale)
            resampled = bicubic_upscale(reference, *out.shape[1:])
            values.append(psnr(out, resampled, "rgb", default_shave(scale)))
        rows.append(ConsistencyRow(scale=scale, psnr=float(np.mean(values))))
    return rows


def write_eval_csv(path: Path, rows: list[EvalRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVAL_COLUMNS)
        for row in rows:
            writer.writerow(
                [f"{row.scale:g}", row.method, f"{row.psnr_rgb:.4f}", f"{row.psnr_y:.4f}", f"{row.ssim:.6f}"]
            )
