"""Layer library. The block and model live in ``nn.block`` and ``nn.model``."""

from .module import Conv2d
from .module import LayerNorm
from .module import Linear
from .module import Mlp
from .module import Module
from .module import Parameter

__all__ = ["Conv2d", "LayerNorm", "Linear", "Mlp", "Module", "Parameter"]
