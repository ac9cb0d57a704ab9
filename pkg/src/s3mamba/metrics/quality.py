"""PSNR (RGB and luminance) and single-scale SSIM on ``[3, H, W]`` images in ``[0, 1]``."""

import math
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.signal import convolve2d

from ..core.exceptions import MetricError
from ..core.models import MetricReport

Array = NDArray[np.float64]

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# BT.601 luma on [0, 1] inputs
Y_WEIGHTS = np.array([65.481, 128.553, 24.966])
Y_OFFSET = 16.0


def rgb_to_y(img: ArrayLike) -> Array:
    """``(65.481 R + 128.553 G + 24.966 B + 16) / 255``."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise MetricError(f"expected a [3, H, W] image, got {img.shape}")
    return (np.tensordot(Y_WEIGHTS, img, axes=1) + Y_OFFSET) / 255.0


def default_shave(scale: float) -> int:
    """Border crop used at magnification ``scale``."""
    return math.ceil(scale)


def _crop(pred: ArrayLike, gt: ArrayLike, shave: int) -> tuple[Array, Array]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise MetricError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if shave < 0:
        raise MetricError(f"shave must be non-negative, got {shave}")
    height, width = pred.shape[-2:]
    if height <= 2 * shave or width <= 2 * shave:
        raise MetricError(f"{height}x{width} image is too small to shave {shave} pixels")
    if shave:
        return pred[..., shave:-shave, shave:-shave], gt[..., shave:-shave, shave:-shave]
    return pred, gt


def psnr(
    pred: ArrayLike,
    gt: ArrayLike,
    mode: Literal["rgb", "y"] = "rgb",
    shave: int = 0,
) -> float:
    """``10 log10(1 / MSE)`` after shaving, capped at :data:`PSNR_CAP`."""
    if mode == "y":
        pred, gt = rgb_to_y(pred), rgb_to_y(gt)
    elif mode != "rgb":
        raise MetricError(f"unknown PSNR mode {mode!r}")
    p, g = _crop(pred, gt, shave)
    mse = float(np.mean((p - g) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> Array:
    """Normalized ``size x size`` Gaussian."""
    half = (size - 1) / 2.0
    y, x = np.ogrid[-half : half + 1, -half : half + 1]
    w = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return w / w.sum()


def ssim(pred: ArrayLike, gt: ArrayLike, shave: int = 0) -> float:
    """Mean SSIM on the luminance channel over fully covered window positions."""
    y1, y2 = _crop(rgb_to_y(pred), rgb_to_y(gt), shave)
    if min(y1.shape) < SSIM_WINDOW:
        raise MetricError(f"{y1.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    window = gaussian_window()
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2

    def filt(x: Array) -> Array:
        return convolve2d(x, np.rot90(window, 2), mode="valid")

    mu1 = filt(y1)
    mu2 = filt(y2)
    mu1_sq = mu1 * mu1
    mu2_sq = mu2 * mu2
    mu1_mu2 = mu1 * mu2
    sigma1_sq = filt(y1 * y1) - mu1_sq
    sigma2_sq = filt(y2 * y2) - mu2_sq
    sigma12 = filt(y1 * y2) - mu1_mu2
    ssim_map = ((2 * mu1_mu2 + c1) * (2 * sigma12 + c2)) / (
        (mu1_sq + mu2_sq + c1) * (sigma1_sq + sigma2_sq + c2)
    )
    return float(np.clip(ssim_map.mean(), -1.0, 1.0))


def evaluate(pred: ArrayLike, gt: ArrayLike, scale: float, shave: int | None = None) -> MetricReport:
    """All three metrics with the shave convention for ``scale``."""
    border = default_shave(scale) if shave is None else shave
    return MetricReport(
        psnr_rgb=psnr(pred, gt, "rgb", border),
        psnr_y=psnr(pred, gt, "y", border),
        ssim=ssim(pred, gt, border),
        shave=border,
    )
