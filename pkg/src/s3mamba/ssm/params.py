"""Learned parameters of one scalable selective state space layer."""

import math

import numpy as np

from ..autodiff.tensor import Tensor
from ..core.exceptions import ShapeError
from ..data.rng import SplitMix64
from ..nn.module import Linear
from ..nn.module import Mlp
from ..nn.module import Module
from ..nn.module import Parameter

# softplus(DT_BIAS_INIT) == 1
DT_BIAS_INIT = math.log(math.e - 1.0)

SIGMA_FEATURES = 4


class SsmParams(Module):
    """Diagonal ``A``, skip gain ``D``, the input projections and the scale heads.

    ``A = -exp(A_log)`` keeps every pole strictly negative under any update.
    The input projection emits ``(dt_low, B, C)`` from ``x`` and a low-rank
    projection lifts ``dt_low`` back to one step size per channel. The scale
    heads map ``(s, 1/s, coord_x, coord_y)`` to the step and input modulation;
    their last layers start at zero so the modulation is neutral at init.
    ``scale_aware=False`` builds the plain selective layer without heads.
    """

    def __init__(
        self,
        d_inner: int,
        n_state: int,
        rng: SplitMix64,
        dt_rank: int | None = None,
        sigma_hidden: int = 16,
        scale_aware: bool = True,
    ) -> None:
        if d_inner < 1 or n_state < 1:
            raise ShapeError(f"need d_inner >= 1 and n_state >= 1, got {d_inner}, {n_state}")
        self.d_inner = d_inner
        self.n_state = n_state
        self.dt_rank = dt_rank or max(1, math.ceil(d_inner / 16))
        self.A_log = Parameter(np.log(np.tile(np.arange(1.0, n_state + 1.0), (d_inner, 1))))
        self.D = Parameter(np.ones(d_inner))
        self.x_proj = Linear(d_inner, self.dt_rank + 2 * n_state, rng, bias=False)
        self.dt_proj = Linear(self.dt_rank, d_inner, rng)
        self.dt_proj.bias = Parameter(np.full(d_inner, DT_BIAS_INIT))
        self.scale_aware = scale_aware
        self.sigma_delta: Mlp | None = None
        self.sigma_b: Mlp | None = None
        if scale_aware:
            self.sigma_delta = Mlp(SIGMA_FEATURES, sigma_hidden, d_inner, rng, zero_last=True)
            self.sigma_b = Mlp(SIGMA_FEATURES, sigma_hidden, n_state, rng, zero_last=True)

    @property
    def A(self) -> Tensor:
        return -self.A_log.exp()


def compute_input_projections(x: Tensor, params: SsmParams) -> tuple[Tensor, Tensor, Tensor]:
    """``(B, C, delta)`` for every position of ``x [..., L, D_inner]``.

    ``B`` and ``C`` are linear in ``x``; ``delta = softplus(dt_proj(dt_low))``
    is strictly positive.
    """
    if x.shape[-1] != params.d_inner:
        raise ShapeError(f"expected {params.d_inner} channels, got {x.shape}")
    proj = params.x_proj(x)
    r, n = params.dt_rank, params.n_state
    dt_low = proj[..., :r]
    b = proj[..., r : r + n]
    c = proj[..., r + n :]
    delta = params.dt_proj(dt_low).softplus()
    return b, c, delta
