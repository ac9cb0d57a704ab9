"""PNG / binary PPM reading and writing through Pillow."""

from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from PIL import Image
from PIL import UnidentifiedImageError

from ..core.exceptions import ImageFormatError

Array = NDArray[np.float64]

IMAGE_SUFFIXES = (".png", ".ppm", ".pnm")
_SUPPORTED_MODES = ("RGB", "RGBA")


def load_image(path: Path | str) -> Array:
    """Read an 8-bit RGB/RGBA PNG or P6 PPM as ``[3, H, W]`` in ``[0, 1]``.

    Alpha is dropped. Other color types or bit depths raise
    :class:`ImageFormatError`.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in _SUPPORTED_MODES:
                raise ImageFormatError(f"{path}: unsupported image mode {im.mode!r}")
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, SyntaxError, OSError, ValueError) as e:
        raise ImageFormatError(f"{path}: cannot decode image: {e}") from e
    return rgb.transpose(2, 0, 1).astype(np.float64) / 255.0


def to_uint8(img: ArrayLike) -> NDArray[np.uint8]:
    """``[3, H, W]`` floats -> ``[H, W, 3]`` bytes, clipped and rounded."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ImageFormatError(f"expected a [3, H, W] image, got {img.shape}")
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8).transpose(1, 2, 0)


def save_image(path: Path | str, img: ArrayLike) -> None:
    """Write PNG, or binary PPM when the suffix is ``.ppm``/``.pnm``."""
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() in (".ppm", ".pnm") else "PNG"
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(img)).save(path, format=fmt)


def list_images(directory: Path | str) -> list[Path]:
    """Image files of a directory in name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ImageFormatError(f"{directory} is not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
