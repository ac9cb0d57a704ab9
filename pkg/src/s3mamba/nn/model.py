"""End-to-end arbitrary-scale super-resolution network."""

from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import logit

from ..autodiff.functional import unfold3x3
from ..autodiff.tensor import Array
from ..autodiff.tensor import Tensor
from ..autodiff.tensor import concat
from ..autodiff.tensor import no_grad
from ..autodiff.tensor import take
from ..config.logging import get_logger
from ..core.exceptions import ShapeError
from ..core.models import ModelConfig
from ..core.protocols import SequenceMixer
from ..data.pipeline import cell_centers
from ..data.resample import bicubic_sample
from ..data.rng import SplitMix64
from ..ssm.modulation import ScaleContext
from .block import FeatureMap
from .block import MlpBranch
from .block import SequenceSSSM
from .block import SSSMBlock
from .module import Conv2d
from .module import Linear
from .module import Module

logger = get_logger(__name__)

# (rel_y * H, rel_x * W, s, 1/s) appended to every gathered feature vector
QUERY_EXTRAS = 4
BICUBIC_CLIP = 1e-4


class ResBlock(Module):
    """conv-SiLU-conv with an identity skip."""

    def __init__(self, channels: int, rng: SplitMix64) -> None:
        self.conv1 = Conv2d(channels, channels, 3, rng)
        self.conv2 = Conv2d(channels, channels, 3, rng)

    def forward(self, x: Tensor) -> Tensor:
        return x + self.conv2(self.conv1(x).silu())


class Backbone(Module):
    """Shallow conv, residual body and tail conv with a long skip."""

    def __init__(self, channels: int, n_resblocks: int, rng: SplitMix64) -> None:
        self.head = Conv2d(3, channels, 3, rng)
        self.body = [ResBlock(channels, rng) for _ in range(n_resblocks)]
        self.tail = Conv2d(channels, channels, 3, rng)

    def forward(self, lr: Tensor) -> Tensor:
        shallow = self.head(lr)
        x = shallow
        for block in self.body:
            x = block(x)
        return self.tail(x) + shallow


def unfold_local(f_lr: Tensor) -> Tensor:
    """3x3 replicate-padded neighbourhoods stacked into channels: ``[B, 9C, H, W]``."""
    return unfold3x3(f_lr)


def nearest_cells(coords: Array, height: int, width: int) -> tuple[Array, Array]:
    """Row and column index of the LR cell whose center is nearest each query."""
    rows = np.clip(np.floor((coords[:, 0] + 1.0) * 0.5 * height), 0, height - 1)
    cols = np.clip(np.floor((coords[:, 1] + 1.0) * 0.5 * width), 0, width - 1)
    return rows.astype(np.intp), cols.astype(np.intp)


def _gather(
    table: Tensor, rows: Array, cols: Array, coords: Array, height: int, width: int, scale: float
) -> Tensor:
    """Feature rows at ``(rows, cols)`` plus relative-coordinate and scale columns."""
    flat = rows * width + cols
    centers = cell_centers(height, width)[flat]
    rel = coords - centers
    q = coords.shape[0]
    extras = np.column_stack(
        [rel[:, 0] * height, rel[:, 1] * width, np.full(q, scale), np.full(q, 1.0 / scale)]
    )
    return concat([take(table, flat, axis=0), Tensor(extras)], axis=1)


def gather_query_features(
    f_fusion: Tensor,
    coords_hr: ArrayLike,
    scale: float,
    local_ensemble: bool = False,
) -> Tensor:
    """``[Q, C_fusion + 4]`` per-query features from a ``[1, C_fusion, H, W]`` map.

    By default each query reads the nearest LR cell. With ``local_ensemble`` the
    four surrounding cells are blended with bilinear weights, each carrying its
    own relative coordinate.
    """
    coords = np.asarray(coords_hr, dtype=np.float64)
    if f_fusion.ndim != 4 or f_fusion.shape[0] != 1:
        raise ShapeError(f"expected a single [1, C, H, W] feature map, got {f_fusion.shape}")
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ShapeError(f"coords must be [Q, 2], got {coords.shape}")
    _, channels, height, width = f_fusion.shape
    table = f_fusion.reshape(channels, height * width).transpose(1, 0)

    if not local_ensemble:
        rows, cols = nearest_cells(coords, height, width)
        return _gather(table, rows, cols, coords, height, width, scale)

    py = np.clip((coords[:, 0] + 1.0) * 0.5 * height - 0.5, 0.0, height - 1.0)
    px = np.clip((coords[:, 1] + 1.0) * 0.5 * width - 0.5, 0.0, width - 1.0)
    y0 = np.floor(py)
    x0 = np.floor(px)
    fy = py - y0
    fx = px - x0
    out: Tensor | None = None
    for dy, wy in ((0, 1.0 - fy), (1, fy)):
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            rows = np.minimum(y0 + dy, height - 1).astype(np.intp)
            cols = np.minimum(x0 + dx, width - 1).astype(np.intp)
            part = _gather(table, rows, cols, coords, height, width, scale)
            part = part * Tensor((wy * wx)[:, None])
            out = part if out is None else out + part
    assert out is not None
    return out


class S3Mamba(Module):
    """LR image + query coordinates + scale -> RGB at each query.

    Backbone features are fused from a local 3x3 unfold and a global stack of
    scalable scan blocks, gathered per query, gated by a scale-aware attention
    sequence and decoded by two further sequence layers.
    """

    def __init__(self, cfg: ModelConfig, seed: int = 0) -> None:
        self.cfg = cfg
        rng = SplitMix64(seed)
        c = cfg.d_model
        self.backbone = Backbone(c, cfg.n_resblocks, rng)
        self.blocks: list[SSSMBlock] = []
        if cfg.use_gfe:
            self.blocks = [
                SSSMBlock(
                    cfg.block_config(),
                    rng,
                    dt_rank=cfg.dt_rank,
                    sigma_hidden=cfg.sigma_hidden,
                    scale_aware=cfg.decoder == "sssm",
                    method=cfg.scan_method,
                )
                for _ in range(cfg.n_sssm_blocks)
            ]
        self.proj = Linear(10 * c + QUERY_EXTRAS, c, rng)
        self.embed: Linear | None = None
        self.branch_alpha: SequenceMixer | None = None
        if cfg.use_sfatt:
            self.embed = Linear(QUERY_EXTRAS, c, rng)
            self.branch_alpha = self._branch(rng)
        self.branch_feat: SequenceMixer = self._branch(rng)
        self.branch_rgb: SequenceMixer = self._branch(rng)
        self.head = Linear(c, 3, rng, zero_init=True)
        logger.debug("model_built", decoder=cfg.decoder, parameters=self.num_parameters())

    def _branch(self, rng: SplitMix64) -> SequenceSSSM | MlpBranch:
        """Decoder sequence layer; the mlp baseline is sized to the sssm parameter count."""
        cfg = self.cfg
        if cfg.decoder == "mlp":
            reference = SequenceSSSM(
                cfg.d_model,
                cfg.inner_width,
                cfg.n_state,
                SplitMix64(0),
                dt_rank=cfg.dt_rank,
                sigma_hidden=cfg.sigma_hidden,
            )
            hidden = MlpBranch.hidden_for(cfg.d_model, reference.num_parameters())
            return MlpBranch(cfg.d_model, hidden, rng)
        return SequenceSSSM(
            cfg.d_model,
            cfg.inner_width,
            cfg.n_state,
            rng,
            dt_rank=cfg.dt_rank,
            sigma_hidden=cfg.sigma_hidden,
            scale_aware=cfg.decoder == "sssm",
            method=cfg.scan_method,
        )

    # ----------------------------------------------------------- encoder side

    def global_features(self, f_lr: Tensor, ctx: ScaleContext) -> Tensor:
        """Stack of SSSM blocks over the LR features (identity when disabled)."""
        fmap = FeatureMap(f_lr)
        for block in self.blocks:
            fmap = block(fmap, ctx)
        return fmap.tensor

    def encode(self, lr: Tensor, scale: float) -> Tensor:
        """``F_fusion = concat(F_local, F_global)``: ``[1, 10C, h, w]``."""
        f_lr = self.backbone(lr)
        height, width = lr.shape[2:]
        ctx = ScaleContext(scale, cell_centers(height, width))
        f_local = unfold_local(f_lr)
        f_global = self.global_features(f_lr, ctx)
        return concat([f_local, f_global], axis=1)

    # ----------------------------------------------------------- decoder side

    def scale_aware_attention(
        self,
        f_hr: Tensor,
        coords_hr: ArrayLike,
        scale: float,
        base: Array | None = None,
    ) -> Tensor:
        """Gate, mix and decode per-query features into RGB in ``(0, 1)``.

        ``base`` is an optional ``[Q, 3]`` bicubic estimate the head predicts a
        residual over (in logit space).
        """
        if f_hr.ndim != 2 or f_hr.shape[0] == 0:
            raise ShapeError(f"need a non-empty [Q, F] query batch, got {f_hr.shape}")
        ctx = ScaleContext(scale, coords_hr)
        feat = self.proj(f_hr)
        if self.embed is not None and self.branch_alpha is not None:
            alpha = self.branch_alpha(self.embed(ctx.features()), ctx).sigmoid()
            feat = alpha * feat
        feat = self.branch_feat(feat, ctx)
        logits = self.head(self.branch_rgb(feat, ctx))
        if base is not None:
            logits = logits + logit(np.clip(base, BICUBIC_CLIP, 1.0 - BICUBIC_CLIP))
        return logits.sigmoid()

    def forward(self, lr: Any, coords_hr: ArrayLike, scale: float) -> Tensor:
        """Predict ``[Q, 3]`` RGB for raster-ordered query coordinates."""
        lr_t = lr if isinstance(lr, Tensor) else Tensor(lr)
        if lr_t.ndim == 3:
            lr_t = lr_t.reshape(1, *lr_t.shape)
        if lr_t.ndim != 4 or lr_t.shape[:2] != (1, 3):
            raise ShapeError(f"expected an RGB image [3, h, w], got {lr_t.shape}")
        coords = np.asarray(coords_hr, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise ShapeError("query batch must be a non-empty [Q, 2] array")
        f_fusion = self.encode(lr_t, scale)
        f_hr = gather_query_features(f_fusion, coords, scale, self.cfg.local_ensemble)
        base = bicubic_sample(lr_t.data[0], coords) if self.cfg.residual_bicubic else None
        return self.scale_aware_attention(f_hr, coords, scale, base)

    def upscale(self, lr: ArrayLike, scale: float) -> Array:
        """Full-grid prediction: ``[3, h, w]`` -> ``[3, floor(h*s), floor(w*s)]``."""
        img = np.asarray(lr, dtype=np.float64)
        out_h, out_w = output_size(img.shape[1], img.shape[2], scale)
        with no_grad():
            rgb = self.forward(img, cell_centers(out_h, out_w), scale)
        return rgb.data.T.reshape(3, out_h, out_w)


def output_size(height: int, width: int, scale: float) -> tuple[int, int]:
    """``(floor(h*s), floor(w*s))``, at least one pixel each."""
    if scale <= 0:
        raise ShapeError(f"scale must be positive, got {scale}")
    out_h = max(1, int(np.floor(height * scale + 1e-9)))
    out_w = max(1, int(np.floor(width * scale + 1e-9)))
    return out_h, out_w
