"""Zero-order-hold discretization of a diagonal continuous-time system."""

import math

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from ..core.exceptions import DiscretizationError

Array = NDArray[np.float64]

# |z| below which phi1 / phi1' switch to their Taylor expansions
PHI1_TAYLOR = 1e-4
DPHI1_TAYLOR = 1e-2


def phi1(z: ArrayLike) -> Array:
    """``(exp(z) - 1) / z`` with a 4-term Taylor branch near zero."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < PHI1_TAYLOR
    safe = np.where(small, 1.0, z)
    taylor = 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    return np.where(small, taylor, np.expm1(safe) / safe)


def dphi1(z: ArrayLike) -> Array:
    """Derivative of :func:`phi1`: ``(z e^z - expm1(z)) / z**2``."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < DPHI1_TAYLOR
    safe = np.where(small, 1.0, z)
    taylor = 0.5 + z * (1.0 / 3.0 + z * (1.0 / 8.0 + z * (1.0 / 30.0 + z / 144.0)))
    exact = (safe * np.exp(safe) - np.expm1(safe)) / (safe * safe)
    return np.where(small, taylor, exact)


def zoh_arrays(a: ArrayLike, b: ArrayLike, delta: ArrayLike) -> tuple[Array, Array]:
    """Broadcasting form of :func:`zoh_discretize` without argument checks."""
    z = np.asarray(delta, dtype=np.float64) * np.asarray(a, dtype=np.float64)
    return np.exp(z), np.asarray(delta) * np.asarray(b) * phi1(z)


def zoh_discretize(a: float, b: float, delta: float) -> tuple[float, float]:
    """Exact discretization of ``h' = a h + b x`` held constant over ``delta``.

    Returns ``(abar, bbar)`` with ``abar = exp(delta*a)`` and
    ``bbar = (exp(delta*a) - 1) / a * b``, the latter evaluated as
    ``delta * b * phi1(delta*a)`` so that ``a -> 0`` stays well conditioned.
    """
    if not delta > 0.0 or not math.isfinite(delta):
        raise DiscretizationError(f"step size must be positive and finite, got {delta}")
    if a >= 0.0 and abs(delta * a) >= PHI1_TAYLOR:
        raise DiscretizationError(f"continuous pole must be negative, got a={a}")
    abar, bbar = zoh_arrays(a, b, delta)
    return float(abar), float(bbar)
