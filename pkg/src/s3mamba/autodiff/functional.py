"""Fused differentiable operators: convolution, layer norm and 3x3 unfold."""

from collections.abc import Sequence
from typing import Literal

import numpy as np

from ..core.exceptions import ShapeError
from .tensor import Array
from .tensor import Function
from .tensor import Tensor

PaddingMode = Literal["zero", "replicate"]

# row-major offsets of a 3x3 window
_OFFSETS = [(dy, dx) for dy in range(3) for dx in range(3)]


def _pad(x: Array, mode: PaddingMode) -> Array:
    width = ((0, 0), (0, 0), (1, 1), (1, 1))
    if mode == "replicate":
        return np.pad(x, width, mode="edge")
    if mode == "zero":
        return np.pad(x, width, mode="constant")
    raise ShapeError(f"unknown padding mode {mode!r}")


def _patches(x: Array, kernel: int, mode: PaddingMode) -> Array:
    """[B, C, H, W] -> [B, C, k*k, H, W] neighbourhoods (stride 1, same size)."""
    if kernel == 1:
        return x[:, :, None]
    height, width = x.shape[2:]
    padded = _pad(x, mode)
    return np.stack(
        [padded[:, :, dy : dy + height, dx : dx + width] for dy, dx in _OFFSETS],
        axis=2,
    )


def _fold(grad: Array, kernel: int, mode: PaddingMode) -> Array:
    """Adjoint of :func:`_patches`: scatter-add neighbourhood gradients."""
    if kernel == 1:
        return grad[:, :, 0]
    batch, channels, _, height, width = grad.shape
    padded = np.zeros((batch, channels, height + 2, width + 2))
    for idx, (dy, dx) in enumerate(_OFFSETS):
        padded[:, :, dy : dy + height, dx : dx + width] += grad[:, :, idx]
    if mode == "replicate":
        # edge padding copies the border row/column, so its gradient lands there
        padded[:, :, 1, :] += padded[:, :, 0, :]
        padded[:, :, -2, :] += padded[:, :, -1, :]
        padded[:, :, :, 1] += padded[:, :, :, 0]
        padded[:, :, :, -2] += padded[:, :, :, -1]
    return padded[:, :, 1:-1, 1:-1]


class Conv2d(Function):
    """Stride-1 "same" convolution with 1x1 or 3x3 kernels, dense or depthwise."""

    def forward(self, x: Array, w: Array, groups: int, padding_mode: PaddingMode) -> Array:
        if x.ndim != 4 or w.ndim != 4:
            raise ShapeError(f"conv2d expects 4-d input and weight, got {x.shape}, {w.shape}")
        out_ch, in_per_group, kh, kw = w.shape
        channels = x.shape[1]
        if kh != kw or kh not in (1, 3):
            raise ShapeError(f"only 1x1 and 3x3 kernels are supported, got {kh}x{kw}")
        if groups == 1:
            if in_per_group != channels:
                raise ShapeError(f"weight expects {in_per_group} channels, input has {channels}")
        elif groups == channels:
            if in_per_group != 1 or out_ch != channels:
                raise ShapeError("depthwise weight must have shape [C, 1, k, k]")
        else:
            raise ShapeError(f"groups must be 1 or {channels}, got {groups}")

        self.kernel = kh
        self.groups = groups
        self.mode = padding_mode
        self.patches = _patches(x, kh, padding_mode)
        self.w = w.reshape(out_ch, in_per_group, kh * kw)
        if groups == 1:
            out = np.tensordot(self.patches, self.w, axes=([1, 2], [1, 2]))
            return out.transpose(0, 3, 1, 2)
        return np.einsum("bckhw,ck->bchw", self.patches, self.w[:, 0])

    def backward(self, grad: Array) -> Sequence[Array | None]:
        k = self.kernel
        if self.groups == 1:
            gw = np.tensordot(grad, self.patches, axes=([0, 2, 3], [0, 3, 4]))
            gp = np.tensordot(grad, self.w, axes=([1], [0])).transpose(0, 3, 4, 1, 2)
        else:
            gw = np.einsum("bchw,bckhw->ck", grad, self.patches)[:, None]
            gp = grad[:, :, None] * self.w[:, 0][None, :, :, None, None]
        gx = _fold(gp, k, self.mode)
        return gx, gw.reshape(gw.shape[0], gw.shape[1], k, k)


def conv2d(
    x: Tensor,
    w: Tensor,
    bias: Tensor | None = None,
    groups: int = 1,
    padding_mode: PaddingMode = "zero",
) -> Tensor:
    """Convolve ``x`` [B, C, H, W] with ``w`` [O, C/groups, k, k]; output keeps H, W."""
    out = Conv2d.apply(x, w, groups=groups, padding_mode=padding_mode)
    if bias is not None:
        out = out + bias.reshape(bias.shape[0], 1, 1)
    return out


class LayerNorm(Function):
    """Normalize over the last axis, then scale and shift."""

    def forward(self, x: Array, gamma: Array, beta: Array, eps: float) -> Array:
        if x.shape[-1] < 1 or gamma.shape != (x.shape[-1],) or beta.shape != gamma.shape:
            raise ShapeError(f"layer_norm affine shape mismatch for input {x.shape}")
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        self.inv = 1.0 / np.sqrt(var + eps)
        self.xhat = centered * self.inv
        self.gamma = gamma
        return self.xhat * gamma + beta

    def backward(self, grad: Array) -> Sequence[Array | None]:
        lead = tuple(range(grad.ndim - 1))
        g_gamma = (grad * self.xhat).sum(axis=lead)
        g_beta = grad.sum(axis=lead)
        gh = grad * self.gamma
        gx = self.inv * (
            gh
            - gh.mean(axis=-1, keepdims=True)
            - self.xhat * (gh * self.xhat).mean(axis=-1, keepdims=True)
        )
        return gx, g_gamma, g_beta


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-position normalization over the channel (last) axis."""
    return LayerNorm.apply(x, gamma, beta, eps=eps)


class Unfold3x3(Function):
    """Stack each position's replicate-padded 3x3 neighbourhood into channels."""

    def forward(self, x: Array) -> Array:
        batch, channels, height, width = x.shape
        self.shape = x.shape
        patches = _patches(x, 3, "replicate")
        return patches.reshape(batch, channels * 9, height, width)

    def backward(self, grad: Array) -> Sequence[Array | None]:
        batch, channels, height, width = self.shape
        return (_fold(grad.reshape(batch, channels, 9, height, width), 3, "replicate"),)


def unfold3x3(x: Tensor) -> Tensor:
    """[B, C, H, W] -> [B, 9C, H, W]; channel ``c*9 + k`` is neighbour ``k`` of ``c``."""
    if x.ndim != 4:
        raise ShapeError(f"unfold expects a 4-d feature map, got {x.shape}")
    return Unfold3x3.apply(x)
