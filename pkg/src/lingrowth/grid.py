"""Rectangular pixel grids, forward differences and their adjoint.

Arrays are indexed ``[row, column, channel]``. Gradient component 0 is the
forward difference along columns, component 1 along rows; the last column
(resp. row) of each component is zero (homogeneous Neumann boundary).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lingrowth.densities import DataTermProfile
from lingrowth.errors import DimensionMismatchError, DomainError
from lingrowth.utils import ensure_finite, frozen, pixel_norms, reduce_sum

GRADIENT_AXES = (1, 0)


@dataclass(frozen=True, eq=False)
class ImageField:
    values: np.ndarray
    spacing: float = 1.0

    def __post_init__(self) -> None:
        values = ensure_finite(self.values, "image values")
        if values.ndim == 2:
            values = values[:, :, None]
        if values.ndim != 3 or min(values.shape) < 1:
            raise DomainError(f"image values must have shape (H, W, N), got {values.shape}")
        if not self.spacing > 0:
            raise DomainError(f"grid spacing must be > 0, got {self.spacing}")
        object.__setattr__(self, "values", frozen(values))
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    @property
    def pixels(self) -> int:
        return self.height * self.width

    def with_values(self, values: np.ndarray) -> ImageField:
        return ImageField(values, self.spacing)

    def sup_norm(self) -> float:
        return float(np.max(pixel_norms(self.values)))


@dataclass(frozen=True, eq=False)
class GradientField:
    values: np.ndarray
    spacing: float = 1.0

    def __post_init__(self) -> None:
        values = ensure_finite(self.values, "gradient values")
        if values.ndim != 4 or values.shape[2] != 2:
            raise DomainError(
                f"gradient values must have shape (H, W, 2, N), got {values.shape}"
            )
        object.__setattr__(self, "values", frozen(values))
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.values.shape

    def pixel_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values * self.values, axis=(-2, -1)))

    def max_pixel_norm(self) -> float:
        return float(np.max(self.pixel_norms()))


@dataclass(frozen=True, eq=False)
class Mask:
    """Inpainting region D; True marks a pixel with missing data."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=bool, copy=True)
        if values.ndim != 2:
            raise DomainError(f"mask must be two-dimensional, got shape {values.shape}")
        if values.all():
            raise DomainError("mask covers every pixel; at least one must be observed")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls, height: int, width: int) -> Mask:
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def observed(self) -> np.ndarray:
        return ~self.values

    @property
    def masked_count(self) -> int:
        return int(self.values.sum())


def _forward(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    out = np.zeros_like(values)
    head = [slice(None)] * values.ndim
    tail = [slice(None)] * values.ndim
    head[axis] = slice(0, -1)
    tail[axis] = slice(1, None)
    out[tuple(head)] = (values[tuple(tail)] - values[tuple(head)]) / h
    return out


def _backward_adjoint(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    length = values.shape[axis]
    out = np.zeros_like(values)
    if length < 2:
        return out
    inner = [slice(None)] * values.ndim
    shifted = [slice(None)] * values.ndim
    inner[axis] = slice(0, -1)
    out[tuple(inner)] += values[tuple(inner)]
    shifted[axis] = slice(1, None)
    out[tuple(shifted)] -= values[tuple(inner)]
    return out / h


def gradient_values(values: np.ndarray, h: float) -> np.ndarray:
    return np.stack([_forward(values, axis, h) for axis in GRADIENT_AXES], axis=2)


def divergence_values(values: np.ndarray, h: float) -> np.ndarray:
    return sum(
        _backward_adjoint(values[:, :, k, :], axis, h)
        for k, axis in enumerate(GRADIENT_AXES)
    )


def gradient(u: ImageField) -> GradientField:
    return GradientField(gradient_values(u.values, u.spacing), u.spacing)


def divergence(q: GradientField) -> ImageField:
    return ImageField(divergence_values(q.values, q.spacing), q.spacing)


def hessian_field(u: ImageField) -> np.ndarray:
    """Second forward differences, shape (H, W, 2, 2, N)."""
    first = gradient_values(u.values, u.spacing)
    return np.stack(
        [
            gradient_values(first[:, :, k, :], u.spacing)
            for k in range(len(GRADIENT_AXES))
        ],
        axis=2,
    )


def neighbour_counts(height: int, width: int) -> np.ndarray:
    """Number of forward-difference links touching each pixel."""
    counts = np.zeros((height, width))
    counts[:, :-1] += 1
    counts[:, 1:] += 1
    counts[:-1, :] += 1
    counts[1:, :] += 1
    return counts


def check_same_grid(u: ImageField, other: ImageField, name: str = "u0") -> None:
    if u.shape != other.shape:
        raise DimensionMismatchError(f"{name} has shape {other.shape}, expected {u.shape}")
    if u.spacing != other.spacing:
        raise DimensionMismatchError(
            f"{name} has spacing {other.spacing}, expected {u.spacing}"
        )


def check_mask(u: ImageField, m: Mask) -> None:
    if m.shape != (u.height, u.width):
        raise DimensionMismatchError(
            f"mask has shape {m.shape}, expected {(u.height, u.width)}"
        )


def masked_reduce(
    u: ImageField,
    u0: ImageField,
    m: Mask,
    profile: DataTermProfile,
    deterministic: bool = False,
) -> float:
    check_same_grid(u, u0)
    check_mask(u, m)
    residual = pixel_norms(u.values - u0.values)
    terms = u.spacing**2 * profile.value(residual)
    return reduce_sum(terms[m.observed], deterministic)
