"""Central finite-difference checks for reverse-mode gradients."""

from collections.abc import Callable
from collections.abc import Sequence

import numpy as np

from ..data.rng import SplitMix64
from .tensor import Array
from .tensor import Tensor


class GradCheckResult:
    """Worst relative error seen over the probed coordinates."""

    def __init__(self, max_rel_error: float, checked: int, failures: int) -> None:
        self.max_rel_error = max_rel_error
        self.checked = checked
        self.failures = failures

    @property
    def pass_rate(self) -> float:
        return 1.0 if self.checked == 0 else 1.0 - self.failures / self.checked

    def __repr__(self) -> str:
        return (
            f"GradCheckResult(max_rel_error={self.max_rel_error:.3e}, "
            f"checked={self.checked}, failures={self.failures})"
        )


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    """|a - b| / max(|a|, |b|, floor)."""
    return abs(a - b) / max(abs(a), abs(b), floor)


def numeric_grad(
    fn: Callable[[], Tensor],
    target: Tensor,
    index: tuple[int, ...],
    h: float = 1e-5,
) -> float:
    """Central difference of the scalar ``fn()`` with respect to one entry."""
    original = target.data[index]
    target.data[index] = original + h
    plus = fn().item()
    target.data[index] = original - h
    minus = fn().item()
    target.data[index] = original
    return (plus - minus) / (2.0 * h)


def gradcheck(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    *,
    h: float = 1e-5,
    rtol: float = 1e-4,
    floor: float = 1e-8,
    max_per_input: int | None = None,
    seed: int = 0,
) -> GradCheckResult:
    """Compare analytic and numeric gradients of the scalar ``fn()``.

    ``fn`` must rebuild its graph on every call. When ``max_per_input`` is set,
    that many coordinates of each input are probed, chosen with a fixed seed.
    ``floor`` bounds the denominator of the relative error for near-zero gradients.
    """
    for t in inputs:
        t.grad = None
    out = fn()
    out.backward()
    analytic: list[Array] = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs
    ]

    picker = SplitMix64(seed)
    worst = 0.0
    checked = 0
    failures = 0
    for t, grad in zip(inputs, analytic, strict=True):
        flat = np.arange(t.size)
        if max_per_input is not None and t.size > max_per_input:
            flat = np.sort(np.asarray(picker.choice(t.size, max_per_input)))
        for f in flat:
            index = tuple(int(i) for i in np.unravel_index(f, t.shape))
            num = numeric_grad(fn, t, index, h)
            err = relative_error(float(grad[index]), num, floor)
            worst = max(worst, err)
            checked += 1
            if err > rtol:
                failures += 1
    return GradCheckResult(worst, checked, failures)


def random_projection(out: Tensor, seed: int = 0) -> Tensor:
    """Scalar ``sum(out * r)`` for a fixed random ``r`` (probes every output)."""
    r = SplitMix64(seed).normal_array(out.shape)
    return (out * r).sum()
