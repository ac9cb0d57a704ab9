"""Training objective."""

from ..autodiff.tensor import Tensor
from ..core.exceptions import ShapeError


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error over every entry."""
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    return (pred - target).abs().mean()
