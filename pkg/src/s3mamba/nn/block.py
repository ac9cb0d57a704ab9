"""Four-direction scalable scan block over feature maps, plus its 1-D variants."""

import math
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from ..autodiff.tensor import Array
from ..autodiff.tensor import Tensor
from ..autodiff.tensor import concat
from ..autodiff.tensor import take
from ..core.exceptions import ShapeError
from ..core.models import BlockConfig
from ..data.pipeline import cell_centers
from ..data.rng import SplitMix64
from ..ssm.modulation import ScaleContext
from ..ssm.modulation import compute_scale_modulation
from ..ssm.modulation import modulate
from ..ssm.params import SsmParams
from ..ssm.params import compute_input_projections
from ..ssm.scan import ScanMethod
from ..ssm.scan import scan
from .module import Conv2d
from .module import LayerNorm
from .module import Linear
from .module import Module

Direction = Literal[0, 1, 2, 3]
DIRECTIONS: tuple[Direction, ...] = (0, 1, 2, 3)


def direction_order(height: int, width: int, direction: int) -> NDArray[np.intp]:
    """Row-major flat indices in the visiting order of ``direction``.

    0: row-major, 1: row-major reversed, 2: column-major, 3: column-major reversed.
    """
    if direction not in DIRECTIONS:
        raise ShapeError(f"scan direction must be 0..3, got {direction}")
    flat = np.arange(height * width, dtype=np.intp)
    if direction >= 2:
        flat = flat.reshape(height, width).T.ravel()
    if direction % 2 == 1:
        flat = flat[::-1].copy()
    return flat


class FeatureMap:
    """A ``[B, C, H, W]`` tensor together with its cell-center coordinates."""

    def __init__(self, tensor: Tensor, coords: Array | None = None) -> None:
        if tensor.ndim != 4:
            raise ShapeError(f"feature map must be [B, C, H, W], got {tensor.shape}")
        height, width = tensor.shape[2:]
        self.tensor = tensor
        self.coords = cell_centers(height, width) if coords is None else coords
        if self.coords.shape != (height * width, 2):
            raise ShapeError(f"coords {self.coords.shape} do not match a {height}x{width} map")

    @property
    def height(self) -> int:
        return self.tensor.shape[2]

    @property
    def width(self) -> int:
        return self.tensor.shape[3]

    @property
    def channels(self) -> int:
        return self.tensor.shape[1]


def scan_flatten(f: FeatureMap, direction: int) -> tuple[Tensor, Array]:
    """``[B, C, H, W]`` -> ``[B, H*W, C]`` in the given visiting order, with coords."""
    order = direction_order(f.height, f.width, direction)
    batch, channels = f.tensor.shape[:2]
    seq = f.tensor.transpose(0, 2, 3, 1).reshape(batch, f.height * f.width, channels)
    return take(seq, order, axis=1), f.coords[order]


def scan_unflatten(seq: Tensor, height: int, width: int, direction: int) -> FeatureMap:
    """Inverse of :func:`scan_flatten`."""
    inverse = np.argsort(direction_order(height, width, direction))
    batch, length, channels = seq.shape
    if length != height * width:
        raise ShapeError(f"sequence of length {length} does not fill {height}x{width}")
    raster = take(seq, inverse, axis=1)
    return FeatureMap(raster.reshape(batch, height, width, channels).transpose(0, 3, 1, 2))


def _modulated_scan(
    ssm: SsmParams,
    x: Tensor,
    contexts: list[ScaleContext] | None,
    method: ScanMethod,
    repeats: int = 1,
) -> Tensor:
    """Project, optionally modulate, and scan ``x [G, L, D_inner]``.

    ``contexts`` holds one context per ``repeats`` consecutive groups.
    """
    b, c, delta = compute_input_projections(x, ssm)
    if not ssm.scale_aware or not contexts:
        return scan(x, delta, ssm.A, b, c, ssm.D, method=method)
    pairs = [compute_scale_modulation(ctx, ssm) for ctx in contexts]
    delta_scale = concat(
        [ds.reshape(1, *ds.shape) for ds, _ in pairs for _ in range(repeats)], axis=0
    )
    b_scale = concat([bs.reshape(1, *bs.shape) for _, bs in pairs for _ in range(repeats)], axis=0)
    steps = modulate(delta, b, delta_scale, b_scale, c=c)
    return scan(x, steps.delta, ssm.A, steps.b, steps.c, ssm.D, method=method)


class SSSMBlock(Module):
    """``f + proj_out(merge4(scan(SiLU(DWConv(proj_in(LN(f)))))))``.

    The four direction scans share every weight and run stacked on the group
    axis; their outputs are mapped back to raster order and averaged.
    """

    def __init__(
        self,
        cfg: BlockConfig,
        rng: SplitMix64,
        dt_rank: int | None = None,
        sigma_hidden: int = 16,
        scale_aware: bool = True,
        method: ScanMethod = "sequential",
    ) -> None:
        self.cfg = cfg
        self.method: ScanMethod = method
        self.norm = LayerNorm(cfg.d_model)
        self.proj_in = Linear(cfg.d_model, cfg.d_inner, rng)
        self.dwconv = Conv2d(cfg.d_inner, cfg.d_inner, 3, rng, groups=cfg.d_inner)
        self.ssm = SsmParams(
            cfg.d_inner,
            cfg.n_state,
            rng,
            dt_rank=dt_rank,
            sigma_hidden=sigma_hidden,
            scale_aware=scale_aware,
        )
        self.proj_out = Linear(cfg.d_inner, cfg.d_model, rng, zero_init=True)

    def forward(self, f: FeatureMap, ctx: ScaleContext | None = None) -> FeatureMap:
        x = f.tensor
        batch, channels, height, width = x.shape
        if channels != self.cfg.d_model:
            raise ShapeError(f"block expects {self.cfg.d_model} channels, got {channels}")
        if ctx is not None and ctx.coords.shape != f.coords.shape:
            raise ShapeError(f"context has {len(ctx)} coords for a {height}x{width} map")
        length = height * width
        d_inner = self.cfg.d_inner

        u = self.proj_in(self.norm(x.transpose(0, 2, 3, 1)))
        u = self.dwconv(u.transpose(0, 3, 1, 2)).silu()
        seq = u.transpose(0, 2, 3, 1).reshape(batch, length, d_inner)

        orders = [direction_order(height, width, d) for d in DIRECTIONS]
        xs = concat([take(seq, order, axis=1) for order in orders], axis=0)
        contexts = None
        if ctx is not None:
            contexts = [ctx.with_coords(ctx.coords[order]) for order in orders]
        ys = _modulated_scan(self.ssm, xs, contexts, self.method, repeats=batch)

        merged: Tensor | None = None
        for i, order in enumerate(orders):
            y = take(ys[i * batch : (i + 1) * batch], np.argsort(order), axis=1)
            merged = y if merged is None else merged + y
        assert merged is not None
        out = self.proj_out(merged * 0.25)
        out = out.reshape(batch, height, width, channels).transpose(0, 3, 1, 2)
        return FeatureMap(x + out, f.coords)


class SequenceSSSM(Module):
    """1-D scalable scan layer over a query sequence: ``x + proj_out(scan(SiLU(proj_in(LN(x)))))``."""

    def __init__(
        self,
        d_model: int,
        d_inner: int,
        n_state: int,
        rng: SplitMix64,
        dt_rank: int | None = None,
        sigma_hidden: int = 16,
        scale_aware: bool = True,
        method: ScanMethod = "sequential",
    ) -> None:
        self.d_model = d_model
        self.method: ScanMethod = method
        self.norm = LayerNorm(d_model)
        self.proj_in = Linear(d_model, d_inner, rng)
        self.ssm = SsmParams(
            d_inner, n_state, rng, dt_rank=dt_rank, sigma_hidden=sigma_hidden, scale_aware=scale_aware
        )
        self.proj_out = Linear(d_inner, d_model, rng, zero_init=True)

    def forward(self, x: Tensor, ctx: ScaleContext) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.d_model:
            raise ShapeError(f"expected [L, {self.d_model}], got {x.shape}")
        if len(ctx) != x.shape[0]:
            raise ShapeError(f"context has {len(ctx)} coords for {x.shape[0]} positions")
        length = x.shape[0]
        u = self.proj_in(self.norm(x)).silu()
        inner = u.shape[1]
        y = _modulated_scan(self.ssm, u.reshape(1, length, inner), [ctx], self.method)
        return x + self.proj_out(y.reshape(length, inner))


class MlpBranch(Module):
    """Position-wise residual MLP, the scan-free decoder baseline."""

    def __init__(self, d_model: int, hidden: int, rng: SplitMix64) -> None:
        self.d_model = d_model
        self.norm = LayerNorm(d_model)
        self.fc1 = Linear(d_model, hidden, rng)
        self.fc2 = Linear(hidden, d_model, rng, zero_init=True)

    def forward(self, x: Tensor, ctx: ScaleContext | None = None) -> Tensor:
        return x + self.fc2(self.fc1(self.norm(x)).silu())

    @staticmethod
    def hidden_for(d_model: int, target_parameters: int) -> int:
        """Hidden width whose parameter count is closest to ``target_parameters``."""
        per_hidden = 2 * d_model + 1
        fixed = 3 * d_model
        return max(1, math.floor((target_parameters - fixed) / per_hidden + 0.5))
