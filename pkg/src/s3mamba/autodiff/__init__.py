"""Reverse-mode autodiff over float64 NumPy arrays."""

from .functional import conv2d
from .functional import layer_norm
from .functional import unfold3x3
from .gradcheck import gradcheck
from .optim import Adam
from .optim import AdamState
from .optim import step_decay
from .tensor import Function
from .tensor import Tensor
from .tensor import concat
from .tensor import elementwise
from .tensor import is_grad_enabled
from .tensor import matmul
from .tensor import no_grad
from .tensor import take

__all__ = [
    "Adam",
    "AdamState",
    "Function",
    "Tensor",
    "concat",
    "conv2d",
    "elementwise",
    "gradcheck",
    "is_grad_enabled",
    "layer_norm",
    "matmul",
    "no_grad",
    "step_decay",
    "take",
    "unfold3x3",
]
