"""Oracle suite and scan benchmark."""

from .bench import run_bench
from .oracles import CheckResult
from .oracles import run_checks

__all__ = ["CheckResult", "run_bench", "run_checks"]
