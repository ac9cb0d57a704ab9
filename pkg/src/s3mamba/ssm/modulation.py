"""Scale and coordinate modulation of the step size and input matrix."""

import numpy as np
from numpy.typing import ArrayLike

from ..autodiff.tensor import Array
from ..autodiff.tensor import Tensor
from ..config.settings import settings
from ..core.exceptions import DiscretizationError
from ..core.exceptions import ScaleContextError
from ..core.exceptions import ShapeError
from .discretize import zoh_arrays
from .params import SsmParams

COORD_TOLERANCE = 1e-9


class ScaleContext:
    """Magnification factor plus one normalized coordinate per sequence position."""

    def __init__(self, scale: float, coords: ArrayLike) -> None:
        coords = np.asarray(coords, dtype=np.float64)
        if not np.isfinite(scale) or scale <= 0.0:
            raise ScaleContextError(f"scale must be positive, got {scale}")
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ScaleContextError(f"coords must be [L, 2], got {coords.shape}")
        limit = 1.0 + COORD_TOLERANCE
        if coords.size and (not np.all(np.isfinite(coords)) or np.abs(coords).max() > limit):
            raise ScaleContextError("coords must lie in [-1, 1]")
        self.scale = float(scale)
        self.coords: Array = coords

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __repr__(self) -> str:
        return f"ScaleContext(scale={self.scale}, length={len(self)})"

    def features(self) -> Tensor:
        """``[L, 4]`` rows ``(s, 1/s, coord_x, coord_y)``."""
        length = len(self)
        s = np.full((length, 1), self.scale)
        return Tensor(np.concatenate([s, 1.0 / s, self.coords], axis=1))

    def with_coords(self, coords: ArrayLike) -> "ScaleContext":
        return ScaleContext(self.scale, coords)


class ModulatedStep:
    """Step sizes, input matrix and output matrix after modulation."""

    def __init__(self, delta: Tensor, b: Tensor, c: Tensor) -> None:
        if b.shape != c.shape or b.shape[:-1] != delta.shape[:-1]:
            raise ShapeError(f"inconsistent step shapes {delta.shape}, {b.shape}, {c.shape}")
        if settings.debug and delta.size and delta.data.min() <= 0.0:
            raise DiscretizationError("modulated step sizes must be positive")
        self.delta = delta
        self.b = b
        self.c = c


class DiscretizedStep:
    """Per-step ``(abar, bbar)`` of shape ``[..., L, D_inner, N]``."""

    def __init__(self, abar: Array, bbar: Array) -> None:
        self.abar = abar
        self.bbar = bbar


def compute_scale_modulation(ctx: ScaleContext, params: SsmParams) -> tuple[Tensor, Tensor]:
    """``(delta_scale [L, D_inner], b_scale [L, N])`` from ``(s, 1/s, coord)``.

    ``delta_scale = exp(mlp_delta(.))`` and ``b_scale = 1 + mlp_b(.)``; both are
    exactly one while the heads keep their zero-initialized output layer.
    """
    if params.sigma_delta is None or params.sigma_b is None:
        raise ShapeError("these parameters carry no scale heads")
    feats = ctx.features()
    return params.sigma_delta(feats).exp(), params.sigma_b(feats) + 1.0


def modulate(
    delta: Tensor,
    b: Tensor,
    delta_scale: Tensor,
    b_scale: Tensor,
    *,
    c: Tensor,
) -> ModulatedStep:
    """``delta' = delta * delta_scale``, ``b' = b * b_scale``; ``c`` passes through."""
    return ModulatedStep(delta * delta_scale, b * b_scale, c)


def discretize_steps(steps: ModulatedStep, params: SsmParams) -> DiscretizedStep:
    """Materialize the zero-order-hold matrices for inspection and oracles."""
    a = params.A.data
    delta = steps.delta.data[..., None]
    b = steps.b.data[..., None, :]
    abar, bbar = zoh_arrays(a, b, delta)
    return DiscretizedStep(abar, bbar)
