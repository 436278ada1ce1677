"""Numerical checks of the existence, duality and regularity statements."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Sequence

import numpy as np

from lingrowth.config import SolverConfig
from lingrowth.densities import constants
from lingrowth.energy import Problem, dual_variable
from lingrowth.errors import DomainError, UnsupportedCombinationError
from lingrowth.grid import (
    ImageField,
    Mask,
    check_mask,
    check_same_grid,
    gradient,
    hessian_field,
)
from lingrowth.logging import get_logger
from lingrowth.models import (
    DiagnosticsReport,
    DualBoundResult,
    ExponentReport,
    MaxPrincipleResult,
    MinimizingSequenceResult,
    NormEntry,
    SolverTrace,
    StageBoundsResult,
    Theorem,
    UniquenessResult,
)
from lingrowth.solver import MONOTONE_RTOL, continuation
from lingrowth.utils import pixel_norms

logger = get_logger(__name__)

MAX_PRINCIPLE_TOL = 1e-6
DUAL_BOUND_TOL = 1e-12
UNIQUENESS_FACTOR = 10.0
# trials are solved this much tighter than the tolerance they are judged against
UNIQUENESS_SOLVE_FACTOR = 0.01
# dimensions each regularity statement covers, as (lowest, highest or None)
DIMENSIONS: dict[Theorem, tuple[int, int | None]] = {
    Theorem.T1_1: (2, 2),
    Theorem.T1_2: (3, None),
    Theorem.T1_3: (3, None),
    Theorem.T1_4: (2, None),
}


def _check_exponent_inputs(n: int, mu: float) -> Fraction:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise DomainError(f"dimension n must be an integer >= 2, got {n}")
    if not math.isfinite(mu) or mu <= 1:
        raise DomainError(f"ellipticity exponent must be > 1, got {mu}")
    return Fraction(mu)


def mu_bound(theorem: Theorem, n: int, empty_mask: bool = False) -> float:
    return float(_mu_bound(Theorem(theorem), n, empty_mask))


def _mu_bound(theorem: Theorem, n: int, empty_mask: bool) -> Fraction:
    if theorem is Theorem.T1_1:
        return Fraction(2) if empty_mask else Fraction(3, 2)
    if theorem is Theorem.T1_3:
        return Fraction(3 * n, 3 * n - 2)
    return Fraction(2)


def sobolev_exponents(
    n: int, mu: float, theorem: Theorem | str, empty_mask: bool = False
) -> ExponentReport:
    theorem = Theorem(theorem)
    m = _check_exponent_inputs(n, mu)
    n = int(n)
    low, high = DIMENSIONS[theorem]
    if n < low or (high is not None and n > high):
        allowed = f"n = {low}" if high == low else f"n >= {low}"
        raise UnsupportedCombinationError(
            f"theorem {theorem.value} requires {allowed}, got n={n}"
        )

    p: float | None = None
    s: float | None = None
    p_is_bound = False
    s_is_bound = False
    if theorem is Theorem.T1_1:
        p, p_is_bound = math.inf, True
        s, s_is_bound = 2.0, True
    elif theorem is Theorem.T1_2:
        p = 2.0
        s = float(Fraction(4) / (2 + m))
    elif theorem is Theorem.T1_3:
        p = float((1 - m / 2) * Fraction(2 * n, n - 2))
        # the formula for s is undefined at mu = n
        s = float((2 - m) * n / (n - m)) if m != n else None
    else:
        p, p_is_bound = float(4 - m), True

    bound = _mu_bound(theorem, n, empty_mask)
    return ExponentReport(
        n=n,
        mu=float(mu),
        theorem=theorem,
        empty_mask=empty_mask,
        admissible=m < bound,
        p=p,
        s=s,
        p_is_bound=p_is_bound,
        s_is_bound=s_is_bound,
        mu_bound=float(bound),
    )


def max_principle_check(u: ImageField, u0: ImageField, mask: Mask) -> MaxPrincipleResult:
    check_same_grid(u0, u, name="u")
    check_mask(u0, mask)
    sup_u = float(np.max(pixel_norms(u.values)))
    sup_u0 = float(np.max(pixel_norms(u0.values[mask.observed])))
    return MaxPrincipleResult(
        sup_u=sup_u, sup_u0=sup_u0, passed=sup_u <= sup_u0 + MAX_PRINCIPLE_TOL
    )


def dual_bound_check(p: Problem, u: ImageField) -> DualBoundResult:
    max_sigma = dual_variable(p, u).max_pixel_norm()
    nu1 = constants(p.density).nu1
    return DualBoundResult(
        max_sigma=max_sigma, nu1=nu1, passed=max_sigma <= nu1 + DUAL_BOUND_TOL
    )


def random_init(p: Problem, seed: int, trial: int) -> ImageField:
    rng = np.random.default_rng([seed, trial])
    return p.u0.with_values(rng.uniform(0.0, 1.0, size=p.shape))


def uniqueness_check(p: Problem, cfg: SolverConfig, trials: int) -> UniquenessResult:
    if trials < 2:
        raise DomainError(f"uniqueness check needs at least 2 trials, got {trials}")
    tolerance = UNIQUENESS_FACTOR * cfg.grad_tol_for(p.pixels)
    solve_cfg = cfg.model_copy(
        update={"GRAD_TOL": UNIQUENESS_SOLVE_FACTOR * cfg.grad_tol_for(p.pixels)}
    )

    def solve(trial: int) -> np.ndarray:
        u, _ = continuation(p, solve_cfg, init=random_init(p, cfg.SEED, trial))
        return u.values

    if cfg.DETERMINISTIC or cfg.MAX_WORKERS == 1:
        solutions = [solve(trial) for trial in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.MAX_WORKERS) as pool:
            solutions = list(pool.map(solve, range(trials)))

    observed = p.observed
    dev_off = 0.0
    dev_all = 0.0
    for first, second in itertools.combinations(solutions, 2):
        diff = np.abs(first - second)
        dev_off = max(dev_off, float(np.max(diff[observed])))
        dev_all = max(dev_all, float(np.max(diff)))

    passed = dev_off < tolerance and dev_all < tolerance
    if not passed:
        logger.warning(
            "uniqueness check failed: off-D deviation %.3g, full deviation %.3g",
            dev_off,
            dev_all,
            extra={"component": "diagnostics"},
        )
    return UniquenessResult(
        trials=trials,
        max_dev_off_D=dev_off,
        max_dev_all=dev_all,
        tolerance=tolerance,
        passed=passed,
    )


def minimizing_sequence_check(trace: SolverTrace) -> MinimizingSequenceResult:
    k_values = trace.k_values()
    k_delta_values = trace.k_delta_values()

    def non_increasing(values: list[float]) -> bool:
        return all(
            later <= earlier + MONOTONE_RTOL * (1.0 + abs(earlier))
            for earlier, later in zip(values, values[1:])
        )

    k_monotone = non_increasing(k_values)
    k_delta_monotone = non_increasing(k_delta_values)
    sandwich = all(k <= kd for k, kd in zip(k_values, k_delta_values))
    return MinimizingSequenceResult(
        k_values=k_values,
        k_delta_values=k_delta_values,
        k_monotone=k_monotone,
        k_delta_monotone=k_delta_monotone,
        sandwich=sandwich,
        passed=k_monotone and k_delta_monotone and sandwich,
    )


def stage_bounds_check(p: Problem, trace: SolverTrace) -> StageBoundsResult:
    sup_linf = max((stage.sup_norm for stage in trace.stages), default=0.0)
    sup_w11 = max((stage.w11_norm for stage in trace.stages), default=0.0)
    bound = float(np.max(pixel_norms(p.observed_values()))) + MAX_PRINCIPLE_TOL
    passed = math.isfinite(sup_w11) and sup_linf <= bound
    return StageBoundsResult(
        sup_linf=sup_linf, sup_w11=sup_w11, bound=bound, passed=passed
    )


def _weighted_norms(
    magnitudes: np.ndarray, area: float, exponents: Sequence[float]
) -> list[NormEntry]:
    entries: list[NormEntry] = []
    for exponent in exponents:
        if exponent < 1:
            raise DomainError(f"norm exponents must be >= 1, got {exponent}")
        total = float(np.sum(area * magnitudes**exponent))
        entries.append(NormEntry(p=float(exponent), norm=total ** (1.0 / exponent)))
    return entries


def grad_integrability_stats(u: ImageField, p_list: Sequence[float]) -> list[NormEntry]:
    """h^2-weighted p-norms of 1 + |grad u|."""
    magnitudes = 1.0 + gradient(u).pixel_norms()
    return _weighted_norms(magnitudes, u.spacing**2, p_list)


def hessian_integrability_stats(
    u: ImageField, s_list: Sequence[float]
) -> list[NormEntry]:
    """h^2-weighted s-norms of the discrete second derivatives."""
    second = hessian_field(u)
    magnitudes = np.sqrt(np.sum(second * second, axis=(2, 3, 4)))
    return _weighted_norms(magnitudes, u.spacing**2, s_list)


def run_diagnostics(
    p: Problem,
    u: ImageField,
    cfg: SolverConfig,
    trace: SolverTrace | None = None,
    trials: int = 2,
    p_list: Sequence[float] = (1.0, 2.0, 3.0),
    s_list: Sequence[float] = (1.0, 1.5, 2.0),
) -> DiagnosticsReport:
    report = DiagnosticsReport(
        max_principle=max_principle_check(u, p.u0, p.mask),
        dual_bound=dual_bound_check(p, u),
        uniqueness=uniqueness_check(p, cfg, trials),
        minimizing_sequence=(
            minimizing_sequence_check(trace) if trace is not None else None
        ),
        stage_bounds=stage_bounds_check(p, trace) if trace is not None else None,
        grad_integrability=grad_integrability_stats(u, p_list),
        hessian_integrability=hessian_integrability_stats(u, s_list),
    )
    if not report.passed:
        logger.warning("diagnostics reported a failed check", extra={"component": "diagnostics"})
    return report
