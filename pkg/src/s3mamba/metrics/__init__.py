"""Image quality metrics."""

from .quality import evaluate
from .quality import psnr
from .quality import rgb_to_y
from .quality import ssim

__all__ = ["evaluate", "psnr", "rgb_to_y", "ssim"]
