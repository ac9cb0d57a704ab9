"""Procedural RGB texture corpus: oriented sinusoids, filtered noise, convex polygons."""

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any
from typing import Literal
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:
    from typing_extensions import Self

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel
from pydantic import Field
from pydantic import model_validator
from scipy.ndimage import gaussian_filter

from ..config.logging import get_logger
from ..config.settings import settings
from ..core.exceptions import DataError
from .imageio import save_image
from .rng import SplitMix64
from .rng import derive_seed

logger = get_logger(__name__)

Array = NDArray[np.float64]
Kind = Literal["sinusoid", "noise", "polygon"]

GENERATOR_VERSION = "1"
MIN_SIZE = 96
KINDS: tuple[Kind, ...] = ("sinusoid", "noise", "polygon")


class ImageRecipe(BaseModel):
    """Everything needed to regenerate one corpus image."""

    index: int = Field(ge=0)
    kind: Kind
    seed: int = Field(ge=0)
    params: dict[str, Any] = Field(default_factory=dict)


class CorpusManifest(BaseModel):
    """Contents of ``manifest.json``."""

    generator_version: str = GENERATOR_VERSION
    seed: int = Field(ge=0)
    size: int = Field(ge=MIN_SIZE)
    count: int = Field(ge=0)
    images: list[ImageRecipe] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_count(self) -> Self:
        if self.count != len(self.images):
            raise ValueError(f"count={self.count} but {len(self.images)} images listed")
        return self


def _sinusoid(rng: SplitMix64, size: int) -> tuple[Array, dict[str, Any]]:
    """Two oriented plane waves with integer frequencies (cycles per image)."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    waves: list[tuple[int, int, float, float]] = []
    used: set[tuple[int, int]] = {(0, 0)}
    field = np.zeros((size, size))
    for amp_lo, amp_hi in ((0.2, 0.3), (0.05, 0.1)):
        fy, fx = 0, 0
        while (fy, fx) in used:
            fy = rng.randbelow(25) - 12
            fx = rng.randbelow(25) - 12
        used |= {(fy, fx), (-fy, -fx)}
        amp = rng.uniform(amp_lo, amp_hi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        field += amp * np.cos(2.0 * np.pi * (fy * yy + fx * xx) + phase)
        waves.append((fy, fx, amp, phase))
    gains = rng.uniform_array(3, 0.5, 1.0)
    offsets = rng.uniform_array(3, 0.4, 0.6)
    img = offsets[:, None, None] + gains[:, None, None] * field[None]
    params = {
        "waves": [{"fy": w[0], "fx": w[1], "amplitude": w[2], "phase": w[3]} for w in waves],
        "gains": gains.tolist(),
        "offsets": offsets.tolist(),
    }
    return img, params


def _noise(rng: SplitMix64, size: int) -> tuple[Array, dict[str, Any]]:
    """Gaussian-filtered white noise, stretched to a random sub-range of [0, 1]."""
    sigma = rng.uniform(1.0, 4.0)
    low = rng.uniform(0.0, 0.3)
    high = rng.uniform(0.7, 1.0)
    raw = rng.normal_array((3, size, size))
    smooth = np.stack([gaussian_filter(ch, sigma, mode="wrap") for ch in raw])
    span = smooth.max() - smooth.min()
    unit = (smooth - smooth.min()) / (span if span > 0 else 1.0)
    return low + (high - low) * unit, {"sigma": sigma, "low": low, "high": high}


def _polygon(rng: SplitMix64, size: int) -> tuple[Array, dict[str, Any]]:
    """Convex polygons over a flat background, filled by half-plane tests."""
    background = rng.uniform_array(3)
    img = np.broadcast_to(background[:, None, None], (3, size, size)).copy()
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    shapes = []
    for _ in range(2 + rng.randbelow(3)):
        cy = rng.uniform(0.2, 0.8) * size
        cx = rng.uniform(0.2, 0.8) * size
        radius = rng.uniform(0.1, 0.35) * size
        n_vertices = 3 + rng.randbelow(5)
        angles = np.sort(rng.uniform_array(n_vertices, 0.0, 2.0 * np.pi))
        vy = cy + radius * np.sin(angles)
        vx = cx + radius * np.cos(angles)
        inside = np.ones((size, size), dtype=bool)
        for k in range(n_vertices):
            y0, x0 = vy[k], vx[k]
            y1, x1 = vy[(k + 1) % n_vertices], vx[(k + 1) % n_vertices]
            inside &= (x1 - x0) * (yy - y0) - (y1 - y0) * (xx - x0) >= 0.0
        color = rng.uniform_array(3)
        img[:, inside] = color[:, None]
        shapes.append(
            {"vertices_y": vy.tolist(), "vertices_x": vx.tolist(), "color": color.tolist()}
        )
    return img, {"background": background.tolist(), "polygons": shapes}


GENERATORS = {"sinusoid": _sinusoid, "noise": _noise, "polygon": _polygon}


def render(recipe_seed: int, index: int, size: int) -> tuple[Array, ImageRecipe]:
    """Image ``index`` of a corpus; the kind cycles through :data:`KINDS`."""
    kind = KINDS[index % len(KINDS)]
    rng = SplitMix64(recipe_seed)
    img, params = GENERATORS[kind](rng, size)
    recipe = ImageRecipe(index=index, kind=kind, seed=recipe_seed, params=params)
    return np.clip(img, 0.0, 1.0), recipe


def procedural_corpus(n: int, size: int, seed: int) -> tuple[list[Array], CorpusManifest]:
    """``n`` deterministic ``[3, size, size]`` images in ``[0, 1]`` and their manifest."""
    if size < MIN_SIZE:
        raise DataError(f"procedural images must be at least {MIN_SIZE} px, got {size}")
    if n < 0:
        raise DataError(f"image count must be non-negative, got {n}")
    seeds = [derive_seed(seed, i) for i in range(n)]
    jobs = list(zip(seeds, range(n), [size] * n, strict=True))
    if settings.workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            results = list(pool.map(lambda job: render(*job), jobs))
    else:
        results = [render(*job) for job in jobs]
    images = [img for img, _ in results]
    manifest = CorpusManifest(seed=seed, size=size, count=n, images=[r for _, r in results])
    logger.info("corpus_generated", count=n, size=size, seed=seed)
    return images, manifest


def write_manifest(path: Path, manifest: CorpusManifest) -> None:
    """Stable JSON (sorted keys, fixed indentation) so identical runs match byte-for-byte."""
    payload = json.dumps(manifest.model_dump(mode="json"), sort_keys=True, indent=2)
    path.write_text(payload + "\n", encoding="utf-8")


def write_corpus(directory: Path, n: int, size: int, seed: int) -> CorpusManifest:
    """Render ``n`` images to ``directory/NNNN.png`` next to ``manifest.json``."""
    images, manifest = procedural_corpus(n, size, seed)
    directory.mkdir(parents=True, exist_ok=True)
    for recipe, img in zip(manifest.images, images, strict=True):
        save_image(directory / f"{recipe.index:04d}.png", img)
    write_manifest(directory / "manifest.json", manifest)
    return manifest
