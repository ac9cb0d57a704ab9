"""The ``.s3mb`` named-tensor archive.

Layout::

    b"S3MB" | u32 version (LE) | u64 header length (LE) | JSON header | payload

The header maps each tensor name to its shape, dtype, byte offset into the
payload and byte count, and carries a free-form ``meta`` object (training
state, configuration). Tensors are stored little-endian in insertion order.
"""

import json
import struct
from collections.abc import Mapping
from pathlib import Path
from typing import Any
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel
from pydantic import Field
from pydantic import ValidationError

from ..autodiff.optim import Adam
from ..autodiff.optim import AdamState
from ..config.logging import get_logger
from ..core.exceptions import CheckpointError
from ..core.exceptions import CheckpointFormatError
from ..core.models import RunConfig
from ..nn.model import S3Mamba
from ..nn.module import Module

logger = get_logger(__name__)

MAGIC = b"S3MB"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sIQ")
DTYPES = {"f8": "<f8", "f4": "<f4"}

StorageDtype = Literal["f8", "f4"]


class TensorEntry(BaseModel):
    """Where one tensor lives in the payload."""

    shape: list[int]
    dtype: Literal["<f8", "<f4"]
    offset: int = Field(ge=0)
    nbytes: int = Field(ge=0)


class CheckpointHeader(BaseModel):
    tensors: dict[str, TensorEntry]
    meta: dict[str, Any] = Field(default_factory=dict)


def save_tensors(
    path: Path,
    tensors: Mapping[str, NDArray[np.float64]],
    meta: Mapping[str, Any] | None = None,
    dtype: StorageDtype = "f8",
) -> None:
    """Write ``tensors`` and ``meta``; identical inputs give identical bytes."""
    entries: dict[str, TensorEntry] = {}
    chunks: list[bytes] = []
    offset = 0
    for name, value in tensors.items():
        raw = np.ascontiguousarray(value, dtype=DTYPES[dtype]).tobytes()
        entries[name] = TensorEntry(
            shape=list(np.shape(value)), dtype=DTYPES[dtype], offset=offset, nbytes=len(raw)
        )
        chunks.append(raw)
        offset += len(raw)
    header = CheckpointHeader(tensors=entries, meta=dict(meta or {}))
    text = json.dumps(header.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    encoded = text.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(encoded)))
        fh.write(encoded)
        for chunk in chunks:
            fh.write(chunk)


def load_tensors(path: Path) -> tuple[dict[str, NDArray[np.float64]], dict[str, Any]]:
    """Read every tensor (as float64) and the meta object."""
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if len(blob) < _PREFIX.size:
        raise CheckpointFormatError(f"{path}: truncated prefix")
    magic, version, header_len = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")
    start = _PREFIX.size + header_len
    if start > len(blob):
        raise CheckpointFormatError(f"{path}: header runs past end of file")
    try:
        header = CheckpointHeader.model_validate_json(blob[_PREFIX.size : start])
    except ValidationError as e:
        raise CheckpointFormatError(f"{path}: malformed header: {e}") from e

    payload = memoryview(blob)[start:]
    tensors: dict[str, NDArray[np.float64]] = {}
    for name, entry in sorted(header.tensors.items(), key=lambda kv: kv[1].offset):
        end = entry.offset + entry.nbytes
        if end > len(payload):
            raise CheckpointFormatError(f"{path}: tensor {name} runs past end of file")
        arr = np.frombuffer(payload[entry.offset : end], dtype=entry.dtype)
        if arr.size != int(np.prod(entry.shape, dtype=np.int64)):
            raise CheckpointFormatError(f"{path}: tensor {name} has the wrong byte count")
        tensors[name] = arr.astype(np.float64).reshape(entry.shape)
    return tensors, header.meta


class TrainingCheckpoint:
    """Parameters, optimizer moments, counters and the run configuration."""

    def __init__(
        self,
        model_state: dict[str, NDArray[np.float64]],
        adam: AdamState,
        epoch: int,
        step: int,
        config: RunConfig,
    ) -> None:
        self.model_state = model_state
        self.adam = adam
        self.epoch = epoch
        self.step = step
        self.config = config

    @classmethod
    def capture(
        cls, model: Module, optimizer: Adam, epoch: int, step: int, config: RunConfig
    ) -> "TrainingCheckpoint":
        return cls(model.state_dict(), optimizer.state, epoch, step, config)

    def save(self, path: Path, dtype: StorageDtype = "f8") -> None:
        tensors: dict[str, NDArray[np.float64]] = {}
        for name, value in self.model_state.items():
            tensors[f"model.{name}"] = value
        for name, value in self.adam.m.items():
            tensors[f"adam.m.{name}"] = value
        for name, value in self.adam.v.items():
            tensors[f"adam.v.{name}"] = value
        meta = {
            "epoch": self.epoch,
            "step": self.step,
            "adam": self.adam.hyperparameters(),
            "rng": {"train_seed": self.config.train.seed, "data_seed": self.config.data.seed},
            "config": self.config.model_dump(mode="json"),
            "storage": dtype,
        }
        save_tensors(path, tensors, meta, dtype)
        logger.info("checkpoint_saved", path=str(path), epoch=self.epoch, step=self.step)

    @classmethod
    def load(cls, path: Path) -> "TrainingCheckpoint":
        tensors, meta = load_tensors(path)
        try:
            config = RunConfig.model_validate(meta["config"])
            hyper = meta["adam"]
            adam = AdamState(
                lr=hyper["lr"], beta1=hyper["beta1"], beta2=hyper["beta2"], eps=hyper["eps"]
            )
            adam.t = int(hyper["t"])
            epoch = int(meta["epoch"])
            step = int(meta["step"])
        except (KeyError, TypeError, ValidationError) as e:
            raise CheckpointFormatError(f"{path}: incomplete training metadata: {e}") from e
        model_state: dict[str, NDArray[np.float64]] = {}
        for name, value in tensors.items():
            section, _, rest = name.partition(".")
            if section == "model":
                model_state[rest] = value
            elif name.startswith("adam.m."):
                adam.m[name.removeprefix("adam.m.")] = value
            elif name.startswith("adam.v."):
                adam.v[name.removeprefix("adam.v.")] = value
        return cls(model_state, adam, epoch, step, config)


def export_float32(src: Path, dst: Path) -> None:
    """Re-save a checkpoint with 32-bit storage (inference use; not bit-exact resumable)."""
    tensors, meta = load_tensors(src)
    meta = {**meta, "storage": "f4"}
    save_tensors(dst, tensors, meta, dtype="f4")


def load_model(path: Path) -> tuple[S3Mamba, RunConfig]:
    """Rebuild the network stored in a checkpoint, ready for inference."""
    ckpt = TrainingCheckpoint.load(path)
    model = S3Mamba(ckpt.config.model, seed=ckpt.config.train.seed)
    model.load_state_dict(ckpt.model_state)
    logger.info("model_loaded", path=str(path), epoch=ckpt.epoch)
    return model, ckpt.config
