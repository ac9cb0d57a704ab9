"""Custom exceptions for s3mamba."""


class S3MambaError(Exception):
    """Base exception for all s3mamba errors."""

    pass


class TensorError(S3MambaError):
    """Base exception for tensor engine errors."""

    pass


class ShapeError(TensorError):
    """Raised when operand shapes are incompatible."""

    pass


class NonFiniteError(TensorError):
    """Raised in debug mode when a NaN or Inf value is produced."""

    pass


class ZeroDivisionTensorError(TensorError):
    """Raised in debug mode when a tensor is divided by zero."""

    pass


class MissingGradientError(TensorError):
    """Raised when an optimizer step finds a parameter without a gradient."""

    pass


class SsmError(S3MambaError):
    """Base exception for state space model errors."""

    pass


class DiscretizationError(SsmError):
    """Raised when a discretization receives a non-positive step size."""

    pass


class ScaleContextError(SsmError):
    """Raised when a scale or coordinate set is out of its valid range."""

    pass


class DataError(S3MambaError):
    """Base exception for data pipeline errors."""

    pass


class ImageFormatError(DataError):
    """Raised when an image file is malformed or uses an unsupported layout."""

    pass


class SourceTooSmallError(DataError):
    """Raised when a source image cannot hold the requested crop."""

    pass


class MetricError(S3MambaError):
    """Raised when metric inputs are inconsistent or too small."""

    pass


class TrainingError(S3MambaError):
    """Base exception for training errors."""

    pass


class DivergenceError(TrainingError):
    """Raised when the training loss stops being finite."""

    def __init__(self, message: str, *, epoch: int, step: int, sample_seed: int) -> None:
        super().__init__(
            f"{message} (epoch={epoch}, step={step}, sample_seed={sample_seed:#018x})"
        )
        self.epoch = epoch
        self.step = step
        self.sample_seed = sample_seed


class CheckpointError(S3MambaError):
    """Base exception for checkpoint errors."""

    pass


class CheckpointFormatError(CheckpointError):
    """Raised when a checkpoint file does not follow the .s3mb layout."""

    pass


class ConfigurationError(S3MambaError):
    """Raised when there's an error with run configuration."""

    pass


class VerificationError(S3MambaError):
    """Raised when a verification check or benchmark assertion fails."""

    pass
