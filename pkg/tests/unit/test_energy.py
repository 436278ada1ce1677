from __future__ import annotations

import numpy as np
import pytest

from lingrowth.densities import DataTermProfile, Density
from lingrowth.energy import (
    Problem,
    dual_variable,
    energy,
    energy_and_gradient,
    energy_gradient,
    preconditioner_diagonal,
)
from lingrowth.errors import DimensionMismatchError, DomainError
from lingrowth.grid import ImageField, Mask

CONFIGS = [
    (Density.mu_family(1.5), DataTermProfile.quadratic(10.0)),
    (Density.mu_family(1.2), DataTermProfile.linear_growth(0.1)),
    (Density.minimal_surface(), DataTermProfile.quadratic(2.0)),
    (Density.minimal_surface(), DataTermProfile.linear_growth(0.5)),
]


def test_constant_data_has_zero_energy():
    u0 = ImageField(np.full((3, 3, 2), 0.4))
    p = Problem.denoising(Density.mu_family(1.5), DataTermProfile.quadratic(1.0), u0)
    breakdown = energy(p, u0, 0.1)
    assert breakdown.total == 0.0
    assert np.all(energy_gradient(p, u0, 0.1).values == 0.0)


def test_pair_problem_energy(pair_problem):
    zero = ImageField(np.array([[0.0, 0.0]]))
    breakdown = energy(pair_problem, zero, 0.0)
    assert breakdown.regularizer == 0.0
    assert breakdown.fidelity == pytest.approx(2.0)
    assert breakdown.total == pytest.approx(2.0)

    steep = ImageField(np.array([[0.0, 3.0]]))
    breakdown = energy(pair_problem, steep, 0.0)
    assert breakdown.regularizer == pytest.approx(2.0, rel=1e-12)
    assert breakdown.fidelity == pytest.approx(0.5)
    assert breakdown.tikhonov == 0.0
    assert breakdown.total == pytest.approx(2.5, rel=1e-12)

    breakdown = energy(pair_problem, steep, 0.2)
    assert breakdown.tikhonov == pytest.approx(0.9)
    assert breakdown.total == pytest.approx(
        breakdown.regularizer + breakdown.fidelity + breakdown.tikhonov, rel=1e-12
    )


def test_pair_problem_gradient(pair_problem):
    zero = ImageField(np.array([[0.0, 0.0]]))
    grad = energy_gradient(pair_problem, zero, 0.0)
    np.testing.assert_allclose(grad.values[0, :, 0], [0.0, -2.0])


@pytest.mark.parametrize(("density", "data"), CONFIGS)
@pytest.mark.parametrize("masked", [False, True])
def test_gradient_matches_finite_differences(density, data, masked, rng):
    u0 = ImageField(rng.uniform(size=(8, 8, 2)), spacing=0.5)
    mask = np.zeros((8, 8), dtype=bool)
    if masked:
        mask[2:6, 1:5] = True
    p = Problem(density, data, u0, Mask(mask))
    u = u0.with_values(u0.values + 0.3 * rng.normal(size=u0.shape))
    delta = 0.01

    _, grad = energy_and_gradient(p, u, delta)
    eps = 1e-6
    for _ in range(20):
        direction = rng.normal(size=u.shape)
        plus = energy(p, u.with_values(u.values + eps * direction), delta).total
        minus = energy(p, u.with_values(u.values - eps * direction), delta).total
        numeric = (plus - minus) / (2 * eps)
        analytic = float(np.sum(grad.values * direction))
        assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-7)


def test_energy_is_translation_invariant(rng):
    density, data = CONFIGS[1]
    u0 = ImageField(rng.uniform(size=(5, 6, 1)))
    u = ImageField(rng.uniform(size=(5, 6, 1)))
    shift = 0.375
    p = Problem.denoising(density, data, u0)
    shifted = Problem.denoising(density, data, ImageField(u0.values + shift))
    base = energy(p, u, 0.01).total
    moved = energy(shifted, ImageField(u.values + shift), 0.01).total
    assert moved == pytest.approx(base, rel=1e-12)


def test_deterministic_energy_matches_default(rng):
    density, data = CONFIGS[0]
    u0 = ImageField(rng.uniform(size=(16, 16, 3)))
    p = Problem.denoising(density, data, u0)
    u = ImageField(rng.uniform(size=(16, 16, 3)))
    assert energy(p, u, 0.1, deterministic=True).total == pytest.approx(
        energy(p, u, 0.1).total, rel=1e-12
    )


def test_energy_rejects_bad_inputs(pair_problem):
    with pytest.raises(DomainError):
        energy(pair_problem, pair_problem.u0, -1.0)
    with pytest.raises(DimensionMismatchError):
        energy(pair_problem, ImageField(np.zeros((2, 2))), 0.0)
    with pytest.raises(DimensionMismatchError):
        Problem(
            Density.mu_family(1.5),
            DataTermProfile.quadratic(1.0),
            ImageField(np.zeros((2, 2))),
            Mask.empty(3, 3),
        )


def test_dual_variable(pair_problem):
    constant = ImageField(np.array([[0.5, 0.5]]))
    assert dual_variable(pair_problem, constant).max_pixel_norm() == 0.0

    steep = ImageField(np.array([[0.0, 3.0]]))
    sigma = dual_variable(pair_problem, steep)
    assert sigma.pixel_norms()[0, 0] == pytest.approx(1.0, rel=1e-12)
    assert sigma.pixel_norms()[0, 1] == 0.0


def test_dual_variable_respects_bound(rng):
    u0 = ImageField(rng.uniform(size=(6, 6, 2)))
    u = ImageField(1e3 * rng.normal(size=(6, 6, 2)))
    p = Problem.denoising(Density.mu_family(1.5), DataTermProfile.quadratic(1.0), u0)
    assert dual_variable(p, u).max_pixel_norm() < 2.0
    p = Problem.denoising(Density.minimal_surface(), DataTermProfile.quadratic(1.0), u0)
    assert dual_variable(p, u).max_pixel_norm() < 1.0


def test_preconditioner_diagonal(noisy_problem):
    p = noisy_problem(shape=(4, 5), channels=2)
    diagonal = preconditioner_diagonal(p, 0.1)
    assert diagonal.shape == (4, 5, 2)
    assert np.all(diagonal > 0)
    # corner pixels touch two links, interior pixels four
    assert diagonal[1, 1, 0] > diagonal[0, 0, 0]
