"""Structural interfaces shared across packages."""

from typing import TYPE_CHECKING
from typing import Protocol
from typing import runtime_checkable

if TYPE_CHECKING:
    from ..autodiff.tensor import Tensor
    from ..ssm.modulation import ScaleContext


@runtime_checkable
class SequenceMixer(Protocol):
    """A residual map over a ``[L, d]`` query sequence, conditioned on scale/coords."""

    def __call__(self, x: "Tensor", ctx: "ScaleContext") -> "Tensor": ...

    def num_parameters(self) -> int: ...
