"""Dataset synthesis, image I/O, resampling and seeded sampling."""

from .corpus import procedural_corpus
from .corpus import write_corpus
from .imageio import load_image
from .imageio import save_image
from .pipeline import Dataset
from .pipeline import QueryBatch
from .pipeline import SamplePair
from .pipeline import make_sample
from .resample import bicubic_resample
from .rng import SplitMix64

__all__ = [
    "Dataset",
    "QueryBatch",
    "SamplePair",
    "SplitMix64",
    "bicubic_resample",
    "load_image",
    "make_sample",
    "procedural_corpus",
    "save_image",
    "write_corpus",
]
