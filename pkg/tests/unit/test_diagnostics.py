from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from lingrowth.config import SolverConfig
from lingrowth.densities import DataTermProfile, Density
from lingrowth.diagnostics import (
    dual_bound_check,
    grad_integrability_stats,
    hessian_integrability_stats,
    max_principle_check,
    minimizing_sequence_check,
    mu_bound,
    run_diagnostics,
    sobolev_exponents,
    stage_bounds_check,
    uniqueness_check,
)
from lingrowth.energy import Problem
from lingrowth.errors import DomainError, UnsupportedCombinationError
from lingrowth.grid import ImageField, Mask
from lingrowth.models import SolverTrace, StageRecord, TerminationReason, Theorem
from lingrowth.solver import continuation


def _stage(stage: int, k: float, k_delta: float, sup_norm: float = 0.5) -> StageRecord:
    return StageRecord(
        stage=stage,
        delta=10.0 ** (-stage - 1),
        iterations=3,
        termination=TerminationReason.STATIONARY,
        grad_norm=0.0,
        k_value=k,
        k_delta_value=k_delta,
        sup_norm=sup_norm,
        w11_norm=1.0,
    )


def test_exponents_theorem_1_2():
    report = sobolev_exponents(3, 1.2, Theorem.T1_2)
    assert report.admissible
    assert report.p == 2.0
    assert report.s == pytest.approx(1.25, rel=1e-15)
    assert report.mu_bound == 2.0


def test_exponents_theorem_1_3():
    report = sobolev_exponents(3, 1.2, "T1_3")
    assert report.admissible
    assert report.mu_bound == pytest.approx(9 / 7)
    assert report.p == pytest.approx(2.4, rel=1e-15)
    assert report.s == pytest.approx(4 / 3, rel=1e-15)


def test_exponents_theorem_1_1_bound_is_strict():
    report = sobolev_exponents(2, 1.5, Theorem.T1_1)
    assert not report.admissible
    assert report.mu_bound == 1.5
    assert report.p == math.inf
    assert report.p_is_bound and report.s_is_bound
    assert sobolev_exponents(2, 1.5, Theorem.T1_1, empty_mask=True).admissible


def test_exponents_theorem_1_4():
    report = sobolev_exponents(2, 1.5, Theorem.T1_4)
    assert report.admissible
    assert report.p == 2.5
    assert report.p_is_bound
    assert report.s is None


@pytest.mark.parametrize(
    ("n", "theorem"),
    [(2, Theorem.T1_3), (2, Theorem.T1_2), (3, Theorem.T1_1), (4, Theorem.T1_1)],
)
def test_exponents_enforce_theorem_dimensions(n, theorem):
    with pytest.raises(UnsupportedCombinationError):
        sobolev_exponents(n, 1.2, theorem)


def test_exponents_theorem_1_4_covers_every_dimension():
    for n in (2, 3, 7):
        assert sobolev_exponents(n, 1.5, Theorem.T1_4).p == 2.5


@pytest.mark.parametrize(("n", "mu"), [(1, 1.5), (2.5, 1.5), (2, 1.0), (2, math.inf)])
def test_exponents_reject_bad_inputs(n, mu):
    with pytest.raises(DomainError):
        sobolev_exponents(n, mu, Theorem.T1_2)


def test_mu_bounds():
    assert mu_bound(Theorem.T1_3, 2) == 1.5
    assert mu_bound(Theorem.T1_1, 2) == mu_bound(Theorem.T1_3, 2)
    assert mu_bound(Theorem.T1_1, 2, empty_mask=True) == 2.0
    assert mu_bound(Theorem.T1_2, 7) == 2.0
    assert mu_bound(Theorem.T1_4, 7) == 2.0
    assert mu_bound(Theorem.T1_3, 4) == 12 / 10


@pytest.mark.parametrize("n", [3, 4, 5, 6, 8])
@pytest.mark.parametrize("mu", [1.01, 1.1, 1.2, 1.25, 1.3, 1.45, 1.5, 1.7, 1.9, 1.99])
def test_exponent_formulas_are_exact(n, mu):
    m = Fraction(mu)
    report = sobolev_exponents(n, mu, Theorem.T1_2)
    assert report.s == float(Fraction(4) / (2 + m))
    report = sobolev_exponents(n, mu, Theorem.T1_3)
    assert report.p == float((1 - m / 2) * Fraction(2 * n, n - 2))
    assert report.s == float((2 - m) * n / (n - m))
    assert report.admissible == (m < Fraction(3 * n, 3 * n - 2))
    assert sobolev_exponents(n, mu, Theorem.T1_4).p == float(4 - m)


def test_max_principle_check():
    u0 = ImageField(np.full((2, 3), 0.6))
    result = max_principle_check(u0, u0, Mask.empty(2, 3))
    assert result.passed
    assert result.sup_u == result.sup_u0

    over = ImageField(np.full((2, 3), 0.61))
    assert not max_principle_check(over, u0, Mask.empty(2, 3)).passed


def test_max_principle_uses_observed_pixels_only():
    values = np.array([[5.0, 0.2, 0.3]])
    mask = Mask(np.array([[True, False, False]]))
    u = ImageField(np.array([[0.3, 0.2, 0.3]]))
    result = max_principle_check(u, ImageField(values), mask)
    assert result.sup_u0 == 0.3
    assert result.passed


def test_dual_bound_check(pair_problem, rng):
    constant = ImageField(np.array([[0.5, 0.5]]))
    result = dual_bound_check(pair_problem, constant)
    assert result.passed
    assert result.max_sigma == 0.0
    assert result.nu1 == pytest.approx(2.0)

    steep = ImageField(1e4 * rng.normal(size=(1, 2)))
    assert dual_bound_check(pair_problem, steep).max_sigma < 2.0

    surface = Problem.denoising(
        Density.minimal_surface(), DataTermProfile.quadratic(1.0), pair_problem.u0
    )
    result = dual_bound_check(surface, steep)
    assert result.passed
    assert result.max_sigma < 1.0


def test_uniqueness_constant_data(solver_cfg):
    p = Problem.denoising(
        Density.mu_family(1.5),
        DataTermProfile.quadratic(1.0),
        ImageField(np.full((3, 3), 0.2)),
    )
    result = uniqueness_check(p, solver_cfg, 3)
    assert result.passed
    assert result.max_dev_off_D == 0.0
    assert result.max_dev_all == 0.0


def test_uniqueness_pair_problem(pair_problem, solver_cfg):
    result = uniqueness_check(pair_problem, solver_cfg, 2)
    assert result.passed
    assert result.max_dev_off_D < 1e-6


def test_uniqueness_half_masked(noisy_problem):
    p = noisy_problem(shape=(8, 8))
    cfg = SolverConfig(SEED=7, MAX_WORKERS=2)
    result = uniqueness_check(p, cfg, 2)
    assert result.passed
    assert result.tolerance == pytest.approx(10 * cfg.grad_tol_for(64))


def test_uniqueness_needs_two_trials(pair_problem, solver_cfg):
    with pytest.raises(DomainError):
        uniqueness_check(pair_problem, solver_cfg, 1)


def test_grad_integrability_stats():
    constant = ImageField(np.full((2, 3), 0.4))
    stats = grad_integrability_stats(constant, [1.0, 2.0])
    assert [entry.p for entry in stats] == [1.0, 2.0]
    assert stats[0].norm == pytest.approx(6.0)
    assert stats[1].norm == pytest.approx(math.sqrt(6.0))

    step = ImageField(np.array([[0.0, 3.0]]))
    assert grad_integrability_stats(step, [2.0])[0].norm == pytest.approx(math.sqrt(17.0))

    with pytest.raises(DomainError):
        grad_integrability_stats(step, [0.5])


def test_hessian_integrability_stats():
    constant = ImageField(np.full((3, 3), 0.4))
    assert hessian_integrability_stats(constant, [1.0])[0].norm == 0.0
    impulse = np.zeros((3, 3))
    impulse[1, 1] = 1.0
    stats = hessian_integrability_stats(ImageField(impulse, spacing=0.5), [1.0, 2.0])
    assert all(entry.norm > 0 for entry in stats)


def test_minimizing_sequence_check():
    trace = SolverTrace(stages=[_stage(0, 2.0, 2.5), _stage(1, 1.9, 2.0), _stage(2, 1.9, 1.95)])
    result = minimizing_sequence_check(trace)
    assert result.passed
    assert result.k_values == [2.0, 1.9, 1.9]

    trace = SolverTrace(stages=[_stage(0, 2.0, 2.5), _stage(1, 2.1, 2.2)])
    result = minimizing_sequence_check(trace)
    assert not result.k_monotone
    assert not result.passed

    trace = SolverTrace(stages=[_stage(0, 2.0, 1.5)])
    assert not minimizing_sequence_check(trace).sandwich


def test_stage_bounds_check(pair_problem):
    trace = SolverTrace(stages=[_stage(0, 1.0, 1.0, 1.5), _stage(1, 1.0, 1.0, 1.8)])
    result = stage_bounds_check(pair_problem, trace)
    assert result.passed
    assert result.sup_linf == 1.8
    assert result.bound == pytest.approx(2.0 + 1e-6)

    trace = SolverTrace(stages=[_stage(0, 1.0, 1.0, 2.1)])
    assert not stage_bounds_check(pair_problem, trace).passed


def test_run_diagnostics(noisy_problem, solver_cfg):
    p = noisy_problem(shape=(6, 6))
    u, trace = continuation(p, solver_cfg)
    report = run_diagnostics(p, u, solver_cfg, trace)
    assert report.passed
    assert report.max_principle.passed
    assert report.dual_bound.passed
    assert report.minimizing_sequence.passed
    assert report.stage_bounds.passed
    assert len(report.grad_integrability) == 3
    dumped = report.model_dump(by_alias=True)
    assert dumped["pass"] is True
    assert dumped["uniqueness"]["pass"] is True


@pytest.mark.parametrize("seed", range(10))
def test_max_principle_on_solver_output(solver_cfg, seed):
    rng = np.random.default_rng([20240611, seed])
    channels = 1 + seed % 2
    if seed % 3 == 0:
        density = Density.minimal_surface()
    else:
        density = Density.mu_family(1.2 + 0.07 * seed)
    mask = np.zeros((16, 16), dtype=bool)
    if seed % 2 == 0:
        mask[:, :8] = True
    p = Problem(
        density,
        DataTermProfile.quadratic(10.0),
        ImageField(rng.uniform(0.0, 1.0, size=(16, 16, channels))),
        Mask(mask),
    )
    u, _ = continuation(p, solver_cfg)
    assert max_principle_check(u, p.u0, p.mask).passed
    assert dual_bound_check(p, u).passed
