"""Wall-clock comparison of the two scan evaluation orders."""

import csv
import statistics
import time
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from ..autodiff.tensor import Tensor
from ..config.logging import get_logger
from ..config.settings import settings
from ..core.exceptions import VerificationError
from ..data.rng import SplitMix64
from ..ssm.scan import ScanMethod
from ..ssm.scan import scan

logger = get_logger(__name__)

BENCH_CHANNELS = 8
BENCH_STATE = 8
CROSS_CHECK_TOL = 1e-10


class BenchRow(BaseModel):
    """Median forward time of one implementation at one sequence length."""

    impl: ScanMethod
    length: int
    median_ms: float


def _inputs(length: int, seed: int) -> list[Tensor]:
    rng = SplitMix64(seed)
    shape = (1, length, BENCH_CHANNELS)
    return [
        Tensor(rng.uniform_array(shape, -1.0, 1.0)),
        Tensor(rng.uniform_array(shape, 0.01, 1.0)),
        Tensor(-rng.uniform_array((BENCH_CHANNELS, BENCH_STATE), 0.1, 5.0)),
        Tensor(rng.normal_array((1, length, BENCH_STATE))),
        Tensor(rng.normal_array((1, length, BENCH_STATE))),
        Tensor(rng.normal_array(BENCH_CHANNELS)),
    ]


def time_scan(method: ScanMethod, length: int, repeat: int = 5) -> tuple[float, np.ndarray]:
    """Median milliseconds of ``repeat`` gradient-tracking forwards, and the last output."""
    inputs = _inputs(length, seed=length)
    for t in inputs:
        t.requires_grad = True
    samples = []
    y = None
    for _ in range(repeat):
        start = time.perf_counter()
        y = scan(*inputs, method=method)  # type: ignore[arg-type]
        samples.append((time.perf_counter() - start) * 1000.0)
    assert y is not None
    return statistics.median(samples), y.data


def run_bench(lengths: list[int], repeat: int = 5) -> list[BenchRow]:
    """Time both implementations at every length.

    Raises:
        VerificationError: if outputs disagree beyond rounding, or the blocked
            implementation grows faster than linearly between ``L`` and ``4L``.
    """
    rows: list[BenchRow] = []
    blocked: dict[int, float] = {}
    for length in sorted(set(lengths)):
        seq_ms, seq_y = time_scan("sequential", length, repeat)
        par_ms, par_y = time_scan("blocked", length, repeat)
        diff = float(np.abs(seq_y - par_y).max())
        if diff > CROSS_CHECK_TOL:
            raise VerificationError(f"scan outputs differ by {diff:.2e} at L={length}")
        rows.append(BenchRow(impl="sequential", length=length, median_ms=seq_ms))
        rows.append(BenchRow(impl="blocked", length=length, median_ms=par_ms))
        blocked[length] = par_ms
        logger.info("bench_length", length=length, sequential_ms=seq_ms, blocked_ms=par_ms, max_diff=diff)

    for length, ms in blocked.items():
        if 4 * length in blocked and ms > 0:
            ratio = blocked[4 * length] / ms
            if ratio >= settings.bench_ratio_limit:
                raise VerificationError(
                    f"blocked scan time grew {ratio:.1f}x from L={length} to L={4 * length}"
                )
    return rows


def write_bench_csv(path: Path, rows: list[BenchRow]) -> None:
    """``impl,length,median_ms`` with one row per measurement."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["impl", "length", "median_ms"])
        for row in rows:
            writer.writerow([row.impl, row.length, f"{row.median_ms:.4f}"])
