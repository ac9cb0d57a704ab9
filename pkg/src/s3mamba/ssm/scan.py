"""Selective scan: the discretized diagonal recurrence over a sequence.

Sequences are laid out as ``[G, L, D]``: ``G`` independent groups (batch
entries and scan directions stacked together), ``L`` time steps and ``D``
channels, each channel carrying an ``N``-dimensional diagonal state.
"""

import math
from collections.abc import Callable
from collections.abc import Sequence
from typing import TYPE_CHECKING
from typing import Literal

import numpy as np

from ..autodiff.tensor import Array
from ..autodiff.tensor import Function
from ..autodiff.tensor import Tensor
from ..core.exceptions import ShapeError
from .discretize import dphi1
from .discretize import phi1

if TYPE_CHECKING:
    from .modulation import ModulatedStep
    from .params import SsmParams

ScanMethod = Literal["sequential", "blocked"]


def recurrence_sequential(a: Array, b: Array) -> Array:
    """``h[:, k] = a[:, k] * h[:, k-1] + b[:, k]`` with ``h[:, -1] = 0``, one step at a time."""
    h = np.empty_like(b)
    carry = np.zeros_like(b[:, 0])
    for k in range(b.shape[1]):
        carry = a[:, k] * carry + b[:, k]
        h[:, k] = carry
    return h


def recurrence_blocked(a: Array, b: Array, block: int | None = None) -> Array:
    """Same recurrence as :func:`recurrence_sequential`, evaluated in ``sqrt(L)`` blocks.

    Each block is scanned locally (all blocks at once), the block end states are
    chained with the associative combine ``(a1, b1) o (a2, b2) = (a1 a2, a2 b1 + b2)``,
    and the resulting carry-ins are folded back in one vectorized pass.
    Total work stays linear in ``L``.
    """
    groups, length = b.shape[:2]
    rest = b.shape[2:]
    if length <= 2:
        return recurrence_sequential(a, b)
    block = block or math.isqrt(length - 1) + 1
    n_blocks = -(-length // block)
    pad = n_blocks * block - length
    if pad:
        widths = [(0, 0), (0, pad)] + [(0, 0)] * len(rest)
        a = np.pad(a, widths, constant_values=1.0)
        b = np.pad(b, widths)
    a = a.reshape(groups, n_blocks, block, *rest)
    b = b.reshape(groups, n_blocks, block, *rest)

    la = np.empty_like(a)  # running product of a inside the block
    lh = np.empty_like(b)  # block-local state with zero carry-in
    la[:, :, 0] = a[:, :, 0]
    lh[:, :, 0] = b[:, :, 0]
    for i in range(1, block):
        la[:, :, i] = a[:, :, i] * la[:, :, i - 1]
        lh[:, :, i] = a[:, :, i] * lh[:, :, i - 1] + b[:, :, i]

    carries = np.empty((groups, n_blocks, *rest))
    carry = np.zeros((groups, *rest))
    for j in range(n_blocks):
        carries[:, j] = carry
        carry = la[:, j, -1] * carry + lh[:, j, -1]

    h = lh + la * carries[:, :, None]
    return h.reshape(groups, n_blocks * block, *rest)[:, :length]


RECURRENCES: dict[str, Callable[[Array, Array], Array]] = {
    "sequential": recurrence_sequential,
    "blocked": recurrence_blocked,
}


def _recurrence(method: str) -> Callable[[Array, Array], Array]:
    if method not in RECURRENCES:
        raise ValueError(f"unknown scan method {method!r}")
    return RECURRENCES[method]


def scan_discretized(
    abar: Array,
    bbar: Array,
    c: Array,
    d: Array,
    x: Array,
    method: ScanMethod = "sequential",
) -> Array:
    """Run the recurrence on already discretized matrices.

    ``abar``/``bbar`` are ``[G, L, D, N]``, ``c`` is ``[G, L, N]``, ``d`` is
    ``[D]`` and ``x`` is ``[G, L, D]``. Returns ``y`` of shape ``[G, L, D]``.
    """
    hs = _recurrence(method)(abar, bbar * x[..., None])
    return np.einsum("gldn,gln->gld", hs, c) + d * x


def _check_shapes(x: Array, delta: Array, a: Array, b: Array, c: Array, d: Array) -> None:
    if x.ndim != 3 or delta.shape != x.shape:
        raise ShapeError(f"scan expects x and delta as [G, L, D], got {x.shape}, {delta.shape}")
    groups, length, channels = x.shape
    if a.ndim != 2 or a.shape[0] != channels:
        raise ShapeError(f"A must be [{channels}, N], got {a.shape}")
    n = a.shape[1]
    if b.shape != (groups, length, n) or c.shape != (groups, length, n):
        raise ShapeError(f"B and C must be [{groups}, {length}, {n}], got {b.shape}, {c.shape}")
    if d.shape != (channels,):
        raise ShapeError(f"D must be [{channels}], got {d.shape}")
    if length < 1:
        raise ShapeError("scan over an empty sequence")


class SelectiveScan(Function):
    """Fused discretize-and-scan with a hand-written reverse recurrence.

    Inputs are ``x, delta: [G, L, D]``, ``A: [D, N]``, ``B, C: [G, L, N]`` and
    ``D: [D]``. Discretization happens per step (``abar = exp(delta*A)``,
    ``bbar = delta*B*phi1(delta*A)``), so the discretized tensors never enter
    the graph.
    """

    def forward(
        self,
        x: Array,
        delta: Array,
        a: Array,
        b: Array,
        c: Array,
        d: Array,
        method: ScanMethod,
    ) -> Array:
        _check_shapes(x, delta, a, b, c, d)
        self.method = method
        if method == "sequential" and not self.needs_grad:
            return self._stream(x, delta, a, b, c, d)

        z = delta[..., None] * a
        abar = np.exp(z)
        bbar = delta[..., None] * b[:, :, None, :] * phi1(z)
        hs = _recurrence(method)(abar, bbar * x[..., None])
        if self.needs_grad:
            self.saved = (x, delta, a, b, c, d, hs)
        return np.einsum("gldn,gln->gld", hs, c) + d * x

    @staticmethod
    def _stream(x: Array, delta: Array, a: Array, b: Array, c: Array, d: Array) -> Array:
        """Inference path: one step at a time, no stored states."""
        groups, length, channels = x.shape
        h = np.zeros((groups, channels, a.shape[1]))
        y = np.empty_like(x)
        for k in range(length):
            z = delta[:, k, :, None] * a
            bbar = delta[:, k, :, None] * b[:, k, None, :] * phi1(z)
            h = np.exp(z) * h + bbar * x[:, k, :, None]
            y[:, k] = np.einsum("gdn,gn->gd", h, c[:, k])
        return y + d * x

    def backward(self, grad: Array) -> Sequence[Array | None]:
        x, delta, a, b, c, d, hs = self.saved
        dl = delta[..., None]
        z = dl * a
        abar = np.exp(z)
        p = phi1(z)
        bcast = b[:, :, None, :]
        bbar = dl * bcast * p

        # adjoint state runs backwards: gh[k] = gy[k] C[k] + abar[k+1] gh[k+1]
        direct = grad[..., None] * c[:, :, None, :]
        a_next = np.zeros_like(abar)
        a_next[:, :-1] = abar[:, 1:]
        gh = _recurrence(self.method)(a_next[:, ::-1], direct[:, ::-1])[:, ::-1]

        h_prev = np.zeros_like(hs)
        h_prev[:, 1:] = hs[:, :-1]

        g_abar = gh * h_prev
        g_bbar = gh * x[..., None]
        gz = g_abar * abar + g_bbar * dl * bcast * dphi1(z)

        gx = (gh * bbar).sum(axis=-1) + grad * d
        gdelta = (gz * a).sum(axis=-1) + (g_bbar * bcast * p).sum(axis=-1)
        ga = (gz * dl).sum(axis=(0, 1))
        gb = (g_bbar * dl * p).sum(axis=2)
        gc = np.einsum("gld,gldn->gln", grad, hs)
        gd = (grad * x).sum(axis=(0, 1))
        return gx, gdelta, ga, gb, gc, gd


def scan(
    x: Tensor,
    delta: Tensor,
    a: Tensor,
    b: Tensor,
    c: Tensor,
    d: Tensor,
    method: ScanMethod = "sequential",
) -> Tensor:
    """Differentiable scan over ``[G, L, D]`` or single ``[L, D]`` sequences."""
    if x.ndim == 2:
        length, channels = x.shape
        y = SelectiveScan.apply(
            x.reshape(1, length, channels),
            delta.reshape(1, length, channels),
            a,
            b.reshape(1, *b.shape),
            c.reshape(1, *c.shape),
            d,
            method=method,
        )
        return y.reshape(length, channels)
    return SelectiveScan.apply(x, delta, a, b, c, d, method=method)


def selective_scan(
    x: Tensor,
    steps: "ModulatedStep",
    params: "SsmParams",
    method: ScanMethod = "sequential",
) -> Tensor:
    """``h_k = abar_k h_{k-1} + bbar_k x_k``, ``y_k = C_k h_k + D x_k`` with ``h_0 = 0``.

    ``abar_k``/``bbar_k`` come from zero-order-hold discretization of
    ``(A, B'_k, delta'_k)`` at every step.
    """
    return scan(x, steps.delta, params.A, steps.b, steps.c, params.D, method=method)


def scan_parallel(x: Tensor, steps: "ModulatedStep", params: "SsmParams") -> Tensor:
    """Blocked associative evaluation of :func:`selective_scan` (same output to rounding)."""
    return selective_scan(x, steps, params, method="blocked")
