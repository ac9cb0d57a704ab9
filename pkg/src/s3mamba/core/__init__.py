"""Core package for s3mamba."""

from .exceptions import CheckpointError
from .exceptions import CheckpointFormatError
from .exceptions import ConfigurationError
from .exceptions import DataError
from .exceptions import DiscretizationError
from .exceptions import DivergenceError
from .exceptions import ImageFormatError
from .exceptions import MetricError
from .exceptions import MissingGradientError
from .exceptions import NonFiniteError
from .exceptions import S3MambaError
from .exceptions import ScaleContextError
from .exceptions import ShapeError
from .exceptions import SourceTooSmallError
from .exceptions import SsmError
from .exceptions import TensorError
from .exceptions import TrainingError
from .exceptions import VerificationError
from .exceptions import ZeroDivisionTensorError
from .models import BlockConfig
from .models import DataConfig
from .models import EvalConfig
from .models import MetricReport
from .models import ModelConfig
from .models import RunConfig
from .models import TrainConfig
from .protocols import SequenceMixer

__all__ = [
    "BlockConfig",
    "CheckpointError",
    "CheckpointFormatError",
    "ConfigurationError",
    "DataConfig",
    "DataError",
    "DiscretizationError",
    "DivergenceError",
    "EvalConfig",
    "ImageFormatError",
    "MetricError",
    "MetricReport",
    "MissingGradientError",
    "ModelConfig",
    "NonFiniteError",
    "RunConfig",
    "S3MambaError",
    "ScaleContextError",
    "SequenceMixer",
    "ShapeError",
    "SourceTooSmallError",
    "SsmError",
    "TensorError",
    "TrainConfig",
    "TrainingError",
    "VerificationError",
    "ZeroDivisionTensorError",
]
