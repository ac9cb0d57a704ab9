"""Adam with bias correction and a step-decay schedule."""

from collections.abc import Mapping

import numpy as np

from ..config.logging import get_logger
from ..core.exceptions import MissingGradientError
from ..core.exceptions import ShapeError
from .tensor import Array
from .tensor import Tensor

logger = get_logger(__name__)


class AdamState:
    """First/second moments per parameter plus the shared step counter."""

    def __init__(
        self,
        lr: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, Array] = {}
        self.v: dict[str, Array] = {}

    def hyperparameters(self) -> dict[str, float | int]:
        """Scalar state for serialization."""
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "t": self.t,
        }


class Adam:
    """Updates named parameters in place from their accumulated ``grad``."""

    def __init__(self, params: Mapping[str, Tensor], state: AdamState | None = None) -> None:
        self.params = dict(params)
        self.state = state or AdamState()
        for name, p in self.params.items():
            self.state.m.setdefault(name, np.zeros_like(p.data))
            self.state.v.setdefault(name, np.zeros_like(p.data))
            if self.state.m[name].shape != p.data.shape:
                raise ShapeError(f"Adam moment shape mismatch for {name}")

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        self.state.lr = value

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        """One bias-corrected Adam update over every parameter."""
        missing = [name for name, p in self.params.items() if p.grad is None]
        if missing:
            raise MissingGradientError(f"no gradient for {', '.join(missing[:5])}")

        s = self.state
        s.t += 1
        bc1 = 1.0 - s.beta1**s.t
        bc2 = 1.0 - s.beta2**s.t
        for name, p in self.params.items():
            g = p.grad
            assert g is not None
            m = s.m[name]
            v = s.v[name]
            m *= s.beta1
            m += (1.0 - s.beta1) * g
            v *= s.beta2
            v += (1.0 - s.beta2) * (g * g)
            p.data -= s.lr * (m / bc1) / (np.sqrt(v / bc2) + s.eps)


def step_decay(lr0: float, epoch: int, decay_epochs: int, factor: float = 0.5) -> float:
    """``lr0 * factor ** floor(epoch / decay_epochs)``."""
    return lr0 * factor ** (epoch // decay_epochs)
