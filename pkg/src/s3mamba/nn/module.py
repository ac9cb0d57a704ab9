"""Parameter containers and the small layer library the model is built from."""

from collections.abc import Iterator
from collections.abc import Mapping
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from ..autodiff.functional import PaddingMode
from ..autodiff.functional import conv2d
from ..autodiff.functional import layer_norm
from ..autodiff.tensor import Array
from ..autodiff.tensor import Tensor
from ..autodiff.tensor import matmul
from ..core.exceptions import ShapeError
from ..data.rng import SplitMix64


class Parameter(Tensor):
    """A trainable leaf tensor."""

    __slots__ = ()

    def __init__(self, data: ArrayLike) -> None:
        super().__init__(np.array(data, dtype=np.float64), requires_grad=True)


def kaiming_uniform(rng: SplitMix64, shape: tuple[int, ...], fan_in: int) -> Array:
    """Uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform_array(shape, -bound, bound)


class Module:
    """Base class: parameters and sub-modules are discovered from attributes.

    Registration order is attribute assignment order, which fixes the order of
    ``named_parameters`` and therefore of checkpoints and optimizer state.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{full}.")
            elif isinstance(value, list | tuple):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, Array]:
        """Copies of every parameter keyed by dotted name."""
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, Array]) -> None:
        """Overwrite parameters in place; names and shapes must match exactly."""
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing = sorted(set(own) - set(state))
            extra = sorted(set(state) - set(own))
            raise ShapeError(f"state mismatch: missing={missing[:5]} unexpected={extra[:5]}")
        for name, p in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ShapeError(f"{name}: expected {p.shape}, got {value.shape}")
            p.data[...] = value

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)


class Linear(Module):
    """``y = x @ W + b`` over the last axis; any number of leading axes."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: SplitMix64,
        bias: bool = True,
        zero_init: bool = False,
    ) -> None:
        self.in_features = in_features
        self.out_features = out_features
        shape = (in_features, out_features)
        self.weight = Parameter(
            np.zeros(shape) if zero_init else kaiming_uniform(rng, shape, in_features)
        )
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise ShapeError(f"Linear expects {self.in_features} features, got {x.shape}")
        lead = x.shape[:-1]
        flat = x.reshape(-1, self.in_features) if x.ndim != 2 else x
        y = matmul(flat, self.weight)
        if self.bias is not None:
            y = y + self.bias
        return y.reshape(*lead, self.out_features) if x.ndim != 2 else y


class Conv2d(Module):
    """Stride-1 same-size convolution (1x1 or 3x3, dense or depthwise)."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: SplitMix64,
        groups: int = 1,
        padding_mode: PaddingMode = "zero",
        zero_init: bool = False,
    ) -> None:
        shape = (out_channels, in_channels // groups, kernel_size, kernel_size)
        fan_in = shape[1] * kernel_size * kernel_size
        self.weight = Parameter(np.zeros(shape) if zero_init else kaiming_uniform(rng, shape, fan_in))
        self.bias = Parameter(np.zeros(out_channels))
        self.groups = groups
        self.padding_mode: PaddingMode = padding_mode

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, groups=self.groups, padding_mode=self.padding_mode)


class LayerNorm(Module):
    """Channel normalization over the last axis with affine parameters."""

    def __init__(self, features: int, eps: float = 1e-5) -> None:
        self.gamma = Parameter(np.ones(features))
        self.beta = Parameter(np.zeros(features))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)


class Mlp(Module):
    """Two linear layers with a SiLU in between."""

    def __init__(
        self,
        in_features: int,
        hidden: int,
        out_features: int,
        rng: SplitMix64,
        zero_last: bool = False,
    ) -> None:
        self.fc1 = Linear(in_features, hidden, rng)
        self.fc2 = Linear(hidden, out_features, rng, zero_init=zero_last)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(self.fc1(x).silu())
