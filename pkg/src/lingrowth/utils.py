from __future__ import annotations

import math

import numpy as np

from lingrowth.errors import DomainError


def ensure_finite(values: np.ndarray, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(array)):
        raise DomainError(f"{name} contains non-finite entries")
    return array


def frozen(values: np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=float, copy=True)
    array.setflags(write=False)
    return array


def frobenius_norms(Z: np.ndarray) -> np.ndarray:
    """Per-matrix Frobenius norm over the two trailing axes."""
    Z = np.asarray(Z, dtype=float)
    return np.sqrt(np.sum(Z * Z, axis=(-2, -1)))


def pixel_norms(values: np.ndarray) -> np.ndarray:
    """Euclidean norm across the channel axis."""
    values = np.asarray(values, dtype=float)
    return np.sqrt(np.sum(values * values, axis=-1))


def reduce_sum(values: np.ndarray, deterministic: bool = False) -> float:
    # fsum is exactly rounded, so the result does not depend on summation order
    if deterministic:
        return math.fsum(np.asarray(values, dtype=float).ravel().tolist())
    return float(np.sum(values))
