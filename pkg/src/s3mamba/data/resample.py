"""Separable bicubic resampling (Keys kernel, a = -0.5)."""

import math

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from ..core.exceptions import ShapeError

Array = NDArray[np.float64]

KEYS_A = -0.5


def cubic_kernel(x: ArrayLike, a: float = KEYS_A) -> Array:
    """Keys cubic convolution kernel; support ``(-2, 2)``."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    ax2 = ax * ax
    ax3 = ax2 * ax
    near = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    far = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))


def source_positions(n_in: int, n_out: int) -> Array:
    """Center-aligned mapping ``src = (dst + 0.5) * n_in / n_out - 0.5``."""
    return (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5


def weight_matrix(n_in: int, n_out: int, antialias: bool = True) -> Array:
    """``[n_out, n_in]`` resampling matrix; rows sum to one.

    When downscaling with ``antialias`` the kernel is stretched by
    ``n_in / n_out``. Taps outside the image are folded onto the border
    sample (replicate boundary).
    """
    if n_in < 1 or n_out < 1:
        raise ShapeError(f"resample sizes must be positive, got {n_in} -> {n_out}")
    stretch = max(n_in / n_out, 1.0) if antialias else 1.0
    radius = 2.0 * stretch
    src = source_positions(n_in, n_out)
    taps = np.floor(src - radius)[:, None] + 1.0 + np.arange(math.ceil(2.0 * radius) + 1)
    w = cubic_kernel((src[:, None] - taps) / stretch)
    w /= w.sum(axis=1, keepdims=True)
    matrix = np.zeros((n_out, n_in))
    rows = np.broadcast_to(np.arange(n_out)[:, None], taps.shape)
    cols = np.clip(taps, 0, n_in - 1).astype(np.intp)
    np.add.at(matrix, (rows, cols), w)
    return matrix


def bicubic_resample(img: ArrayLike, out_h: int, out_w: int, antialias: bool = True) -> Array:
    """Resize a ``[C, H, W]`` image to ``[C, out_h, out_w]``. Values are not clipped."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3:
        raise ShapeError(f"expected a [C, H, W] image, got {img.shape}")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"output size must be at least 1x1, got {out_h}x{out_w}")
    wy = weight_matrix(img.shape[1], out_h, antialias)
    wx = weight_matrix(img.shape[2], out_w, antialias)
    return np.einsum("oh,chw,pw->cop", wy, img, wx)


def bicubic_sample(img: ArrayLike, coords: ArrayLike) -> Array:
    """Evaluate the bicubic interpolant of ``img [C, h, w]`` at normalized coords.

    ``coords [Q, 2]`` follow the cell-center convention, so evaluating at the
    centers of an ``H x W`` grid matches ``bicubic_resample(img, H, W)`` when
    upscaling. Returns ``[Q, C]``.
    """
    img = np.asarray(img, dtype=np.float64)
    coords = np.asarray(coords, dtype=np.float64)
    _, height, width = img.shape

    def axis_taps(c: Array, n: int) -> tuple[NDArray[np.intp], Array]:
        pos = (c + 1.0) * 0.5 * n - 0.5
        base = np.floor(pos)[:, None] + np.arange(-1, 3)
        w = cubic_kernel(pos[:, None] - base)
        w /= w.sum(axis=1, keepdims=True)
        return np.clip(base, 0, n - 1).astype(np.intp), w

    iy, wy = axis_taps(coords[:, 0], height)
    ix, wx = axis_taps(coords[:, 1], width)
    patch = img[:, iy[:, :, None], ix[:, None, :]]
    return np.einsum("cqab,qa,qb->qc", patch, wy, wx)
