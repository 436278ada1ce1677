"""Discrete functionals J, K and K_delta with analytic gradients.

With pixel area h^2 the discrete energy of u is

    sum h^2 F(grad u) + sum_{observed} h^2 omega(|u - u0|) + delta/2 sum h^2 |grad u|^2

J is the quadratic data profile, K the linear-growth one; delta = 0 drops
the Tikhonov part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lingrowth.densities import DataTermProfile, Density
from lingrowth.errors import DomainError
from lingrowth.grid import (
    GradientField,
    ImageField,
    Mask,
    check_mask,
    check_same_grid,
    divergence_values,
    gradient_values,
    neighbour_counts,
)
from lingrowth.models import EnergyBreakdown
from lingrowth.utils import frobenius_norms, pixel_norms, reduce_sum


@dataclass(frozen=True, eq=False)
class Problem:
    """Data, inpainting region and integrands of one restoration problem.

    u0 is only required to be finite here. The [0, 1] range holds for images read
    by PNG ingestion; synthetic problems may carry any finite data.
    """

    density: Density
    data: DataTermProfile
    u0: ImageField
    mask: Mask

    def __post_init__(self) -> None:
        check_mask(self.u0, self.mask)

    @classmethod
    def denoising(
        cls, density: Density, data: DataTermProfile, u0: ImageField
    ) -> Problem:
        return cls(density, data, u0, Mask.empty(u0.height, u0.width))

    @property
    def spacing(self) -> float:
        return self.u0.spacing

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.u0.shape

    @property
    def pixels(self) -> int:
        return self.u0.pixels

    @property
    def observed(self) -> np.ndarray:
        return self.mask.observed

    def observed_values(self) -> np.ndarray:
        return self.u0.values[self.observed]


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not np.isfinite(delta) or delta < 0:
        raise DomainError(f"delta must be >= 0, got {delta}")
    return delta


def _check_field(p: Problem, u: ImageField) -> None:
    check_same_grid(p.u0, u, name="u")


def breakdown_from_values(
    p: Problem, values: np.ndarray, delta: float, deterministic: bool = False
) -> EnergyBreakdown:
    h = p.spacing
    area = h * h
    grad = gradient_values(values, h)
    t = frobenius_norms(grad)

    regularizer = reduce_sum(area * p.density.profile(t), deterministic)
    residual = pixel_norms(values - p.u0.values)
    fidelity = reduce_sum(
        (area * p.data.value(residual))[p.observed], deterministic
    )
    tikhonov = 0.5 * delta * reduce_sum(area * t * t, deterministic)
    return EnergyBreakdown(
        regularizer=regularizer,
        fidelity=fidelity,
        tikhonov=tikhonov,
        total=regularizer + fidelity + tikhonov,
    )


def gradient_from_values(p: Problem, values: np.ndarray, delta: float) -> np.ndarray:
    h = p.spacing
    area = h * h
    grad = gradient_values(values, h)
    t = frobenius_norms(grad)
    flux = (p.density.tangential(t) + delta)[:, :, None, None] * grad

    diff = values - p.u0.values
    weight = p.data.deriv_over_t(pixel_norms(diff)) * p.observed
    return area * (weight[:, :, None] * diff - divergence_values(flux, h))


def energy(
    p: Problem, u: ImageField, delta: float, deterministic: bool = False
) -> EnergyBreakdown:
    _check_field(p, u)
    return breakdown_from_values(p, u.values, _check_delta(delta), deterministic)


def energy_gradient(p: Problem, u: ImageField, delta: float) -> ImageField:
    _check_field(p, u)
    return u.with_values(gradient_from_values(p, u.values, _check_delta(delta)))


def energy_and_gradient(
    p: Problem, u: ImageField, delta: float, deterministic: bool = False
) -> tuple[EnergyBreakdown, ImageField]:
    _check_field(p, u)
    delta = _check_delta(delta)
    return (
        breakdown_from_values(p, u.values, delta, deterministic),
        u.with_values(gradient_from_values(p, u.values, delta)),
    )


def dual_values(p: Problem, values: np.ndarray) -> np.ndarray:
    grad = gradient_values(values, p.spacing)
    return p.density.tangential(frobenius_norms(grad))[:, :, None, None] * grad


def dual_variable(p: Problem, u: ImageField) -> GradientField:
    """sigma = DF(grad u) per pixel."""
    _check_field(p, u)
    return GradientField(dual_values(p, u.values), p.spacing)


def preconditioner_diagonal(p: Problem, delta: float) -> np.ndarray:
    """Fixed diagonal bound on the Hessian of K_delta, shape (H, W, N)."""
    h = p.spacing
    height, width, channels = p.shape
    links = neighbour_counts(height, width)
    curvature = (p.density.curvature_bound + delta) * links / (h * h)
    curvature = curvature + p.data.curvature_bound * p.observed
    diagonal = h * h * np.maximum(curvature, np.finfo(float).tiny)
    return np.repeat(diagonal[:, :, None], channels, axis=2)
