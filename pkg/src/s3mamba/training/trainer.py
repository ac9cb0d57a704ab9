"""L1 training loop with Adam, step-decayed learning rate and periodic checkpoints."""

import csv
import math
from pathlib import Path

import numpy as np

from ..autodiff.optim import Adam
from ..autodiff.optim import AdamState
from ..autodiff.tensor import Tensor
from ..config.logging import get_logger
from ..config.logging import log_epoch
from ..core.exceptions import DivergenceError
from ..core.models import RunConfig
from ..data.pipeline import Dataset
from ..data.pipeline import SamplePair
from ..data.pipeline import make_eval_pair
from ..metrics.quality import default_shave
from ..metrics.quality import psnr
from ..nn.model import S3Mamba
from .checkpoint import StorageDtype
from .checkpoint import TrainingCheckpoint
from .loss import l1_loss

logger = get_logger(__name__)

LOG_FILE = "train_log.csv"


def scale_label(scale: float) -> str:
    """``2.0 -> "x2"``, ``3.5 -> "x3.5"``."""
    return f"x{scale:g}"


def checkpoint_name(epoch: int) -> str:
    return f"ckpt_{epoch:04d}.s3mb"


class EpochLog:
    """One row of the training log."""

    def __init__(self, epoch: int, loss: float, lr: float, psnr: dict[str, float]) -> None:
        self.epoch = epoch
        self.loss = loss
        self.lr = lr
        self.psnr = psnr


def validation_psnr(
    model: S3Mamba, images: list[np.ndarray], scales: list[float]
) -> dict[str, float]:
    """Mean RGB PSNR of full-image upscaling per scale, keyed by :func:`scale_label`."""
    results: dict[str, float] = {}
    for scale in scales:
        values = []
        for gt in images:
            lr, target = make_eval_pair(gt, scale)
            values.append(psnr(model.upscale(lr, scale), target, "rgb", default_shave(scale)))
        results[scale_label(scale)] = float(np.mean(values)) if values else math.nan
    return results


class Trainer:
    """Owns the model, the optimizer and the epoch/step counters of one run."""

    def __init__(
        self,
        cfg: RunConfig,
        dataset: Dataset,
        out_dir: Path | None = None,
        model: S3Mamba | None = None,
        adam: AdamState | None = None,
    ) -> None:
        self.cfg = cfg
        self.dataset = dataset
        self.out_dir = out_dir
        self.model = model or S3Mamba(cfg.model, seed=cfg.train.seed)
        self.optimizer = Adam(
            dict(self.model.named_parameters()), adam or AdamState(lr=cfg.train.lr0)
        )
        self.epoch = 0
        self.step = 0
        self.history: list[EpochLog] = []
        self.save_dtype: StorageDtype = "f8"

    @classmethod
    def resume(
        cls, path: Path, dataset: Dataset | None = None, out_dir: Path | None = None
    ) -> "Trainer":
        """Continue exactly where the checkpoint at ``path`` stopped.

        Without ``dataset`` the corpus is rebuilt from the stored configuration.
        """
        ckpt = TrainingCheckpoint.load(path)
        if dataset is None:
            dataset = Dataset.from_config(ckpt.config.data)
        model = S3Mamba(ckpt.config.model, seed=ckpt.config.train.seed)
        model.load_state_dict(ckpt.model_state)
        trainer = cls(ckpt.config, dataset, out_dir, model=model, adam=ckpt.adam)
        trainer.epoch = ckpt.epoch
        trainer.step = ckpt.step
        logger.info("training_resumed", path=str(path), epoch=ckpt.epoch, step=ckpt.step)
        return trainer

    # ------------------------------------------------------------------ steps

    def sample_loss(self, pair: SamplePair) -> Tensor:
        """Forward one sample and return its L1 loss."""
        assert pair.query.targets is not None
        pred = self.model(pair.lr, pair.query.coords, pair.scale)
        return l1_loss(pred, Tensor(pair.query.targets))

    def train_batch(self, batch: list[tuple[int, SamplePair]], epoch: int) -> float:
        """Accumulate ``loss / B`` gradients over the batch, then take one Adam step."""
        self.model.zero_grad()
        total = 0.0
        for seed, pair in batch:
            loss = self.sample_loss(pair)
            value = loss.item()
            if not math.isfinite(value):
                raise DivergenceError(
                    "non-finite training loss", epoch=epoch, step=self.step, sample_seed=seed
                )
            (loss * (1.0 / len(batch))).backward()
            total += value
        self.optimizer.step()
        self.step += 1
        return total / len(batch)

    def train_epoch(self, epoch: int) -> float:
        """One pass over the epoch's sample stream; returns the mean sample loss."""
        train = self.cfg.train
        self.optimizer.lr = train.lr_at(epoch)
        batch: list[tuple[int, SamplePair]] = []
        losses: list[float] = []
        for item in self.dataset.epoch_samples(epoch, train.samples_per_epoch):
            batch.append(item)
            if len(batch) == train.batch_size:
                losses.append(self.train_batch(batch, epoch) * len(batch))
                batch = []
        if batch:
            losses.append(self.train_batch(batch, epoch) * len(batch))
        count = train.samples_per_epoch or len(self.dataset.train)
        return sum(losses) / count

    def validate(self) -> dict[str, float]:
        images = self.dataset.val[: self.cfg.train.val_images]
        if not images:
            return {}
        return validation_psnr(self.model, images, self.cfg.train.val_scales)

    # ------------------------------------------------------------------- loop

    def fit(self, until_epoch: int | None = None) -> list[EpochLog]:
        """Train from the current epoch up to ``until_epoch`` (default: configured epochs)."""
        train = self.cfg.train
        last = train.epochs if until_epoch is None else until_epoch
        self._start_log()
        for epoch in range(self.epoch, last):
            lr = train.lr_at(epoch)
            loss = self.train_epoch(epoch)
            done = epoch + 1
            scores = self.validate() if done % train.val_every == 0 else {}
            row = EpochLog(done, loss, lr, scores)
            self.history.append(row)
            self.epoch = done
            log_epoch(logger, done, loss, lr, scores)
            self._write_log(row)
            if self.out_dir is not None and (done % train.save_every == 0 or done == last):
                self.save(self.out_dir / checkpoint_name(done))
        return self.history

    def save(self, path: Path) -> None:
        ckpt = TrainingCheckpoint.capture(
            self.model, self.optimizer, self.epoch, self.step, self.cfg
        )
        ckpt.save(path, self.save_dtype)

    def _start_log(self) -> None:
        """Create the run directory and the log header unless a log already exists."""
        if self.out_dir is None:
            return
        path = self.out_dir / LOG_FILE
        if path.exists():
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        labels = [f"psnr_{scale_label(s)}" for s in self.cfg.train.val_scales]
        with path.open("w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow(["epoch", "loss", *labels, "lr"])

    def _write_log(self, row: EpochLog) -> None:
        if self.out_dir is None:
            return
        self._start_log()
        labels = [scale_label(s) for s in self.cfg.train.val_scales]
        with (self.out_dir / LOG_FILE).open("a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            psnr_cells = [repr(row.psnr[label]) if label in row.psnr else "nan" for label in labels]
            writer.writerow([row.epoch, repr(row.loss), *psnr_cells, repr(row.lr)])
