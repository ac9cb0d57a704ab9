"""SplitMix64 pseudo-random streams.

Every random draw in the package (weight init, corpus synthesis, patch
sampling, epoch order) goes through this generator so that results depend
only on integer seeds, never on NumPy's global state or platform.
"""

import numpy as np
from numpy.typing import NDArray

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1
INV_2_53 = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 output function on a 64-bit integer."""
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return z ^ (z >> 31)


def _mix64_array(z: NDArray[np.uint64]) -> NDArray[np.uint64]:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def derive_seed(*parts: int) -> int:
    """Combine integers into one well-mixed 64-bit seed (order sensitive)."""
    state = 0
    for part in parts:
        state = mix64((state ^ (part & MASK)) + GOLDEN & MASK)
    return state


class SplitMix64:
    """Counter-based 64-bit generator: ``state += GOLDEN`` then mix."""

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        return mix64(self.state)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        """``low + (high - low) * (x >> 11) * 2**-53``."""
        return low + (high - low) * ((self.next_u64() >> 11) * INV_2_53)

    def randbelow(self, n: int) -> int:
        """Integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError(f"randbelow needs a positive bound, got {n}")
        return min(int(self.uniform() * n), n - 1)

    def u64_array(self, count: int) -> NDArray[np.uint64]:
        """The next ``count`` outputs, identical to repeated :meth:`next_u64` calls."""
        steps = np.arange(1, count + 1, dtype=np.uint64) * np.uint64(GOLDEN)
        states = steps + np.uint64(self.state)
        self.state = (self.state + GOLDEN * count) & MASK
        return _mix64_array(states)

    def uniform_array(
        self, shape: int | tuple[int, ...], low: float = 0.0, high: float = 1.0
    ) -> NDArray[np.float64]:
        """Array of uniform draws in row-major order."""
        shape = (shape,) if isinstance(shape, int) else shape
        count = int(np.prod(shape, dtype=np.int64))
        unit = (self.u64_array(count) >> np.uint64(11)).astype(np.float64) * INV_2_53
        return (low + (high - low) * unit).reshape(shape)

    def normal_array(self, shape: int | tuple[int, ...]) -> NDArray[np.float64]:
        """Standard normal draws via Box-Muller."""
        shape = (shape,) if isinstance(shape, int) else shape
        u1 = 1.0 - self.uniform_array(shape)
        u2 = self.uniform_array(shape)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates shuffle of ``range(n)``."""
        order = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            order[i], order[j] = order[j], order[i]
        return order

    def choice(self, n: int, k: int) -> list[int]:
        """``k`` distinct integers from ``range(n)`` (partial Fisher-Yates)."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot choose {k} distinct values from {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
