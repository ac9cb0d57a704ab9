"""Training loop, checkpoints, evaluation and ablations."""

from .ablation import run_ablation
from .checkpoint import TrainingCheckpoint
from .checkpoint import load_tensors
from .checkpoint import save_tensors
from .evaluation import evaluate_model
from .loss import l1_loss
from .trainer import Trainer

__all__ = [
    "Trainer",
    "TrainingCheckpoint",
    "evaluate_model",
    "l1_loss",
    "load_tensors",
    "run_ablation",
    "save_tensors",
]
