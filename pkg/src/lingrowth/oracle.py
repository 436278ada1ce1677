"""Brute-force reference minimizers and quadrature for tiny instances.

The energy here is evaluated by an independent batched implementation so
that agreement with the solver does not share code with the solver.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import dblquad
from scipy.optimize import minimize, minimize_scalar

from lingrowth.config import SolverConfig
from lingrowth.densities import DataTermProfile, Density
from lingrowth.energy import Problem, energy
from lingrowth.errors import DomainError, InstanceTooLargeError, OracleDisagreementError
from lingrowth.grid import ImageField, Mask
from lingrowth.logging import get_logger
from lingrowth.models import OracleRow
from lingrowth.solver import continuation

logger = get_logger(__name__)

MAX_PIXELS = 16
MAX_CHANNELS = 2
MAX_GRID_UNKNOWNS = 3
SEARCH_BOX = (-1.0, 2.0)
REFINEMENTS = 2
MAX_SWEEPS = 2000
SWEEP_XTOL = 1e-10
AGREEMENT_TOL = 1e-6
PHI_T_MAX = 1e3

VALUE_RTOL = 1e-4
ARG_TOL = 1e-3
SUITE_SHAPES = ((1, 2), (1, 3), (2, 2), (2, 3))


@dataclass(frozen=True)
class TinyProblem:
    problem: Problem

    def __post_init__(self) -> None:
        height, width, channels = self.problem.shape
        if height * width > MAX_PIXELS or channels > MAX_CHANNELS:
            raise InstanceTooLargeError(
                f"tiny problems allow at most {MAX_PIXELS} pixels and "
                f"{MAX_CHANNELS} channels, got {height}x{width}x{channels}"
            )

    @property
    def unknowns(self) -> int:
        height, width, channels = self.problem.shape
        return height * width * channels


def _batch_energy(p: Problem, batch: np.ndarray, delta: float) -> np.ndarray:
    """K_delta for a batch of fields of shape (B, H, W, N)."""
    h = p.spacing
    area = h * h
    dx = np.zeros_like(batch)
    dy = np.zeros_like(batch)
    dx[:, :, :-1] = np.diff(batch, axis=2) / h
    dy[:, :-1] = np.diff(batch, axis=1) / h
    t = np.sqrt(np.sum(dx * dx + dy * dy, axis=-1))

    regularizer = area * np.sum(p.density.profile(t), axis=(1, 2))
    diff = batch - p.u0.values[None]
    residual = np.sqrt(np.sum(diff * diff, axis=-1))
    fidelity = area * np.sum(
        np.where(p.observed[None], p.data.value(residual), 0.0), axis=(1, 2)
    )
    tikhonov = 0.5 * delta * area * np.sum(t * t, axis=(1, 2))
    return regularizer + fidelity + tikhonov


def _objective(p: Problem, delta: float):
    shape = p.shape

    def value(x: np.ndarray) -> float:
        return float(_batch_energy(p, np.reshape(x, (1, *shape)), delta)[0])

    return value


def _grid_search(p: Problem, delta: float, k: int) -> np.ndarray:
    lo, hi = SEARCH_BOX
    step = 1e-2 if k <= 2 else 5e-2
    axis = np.arange(lo, hi + step / 2, step)
    points = np.array(list(itertools.product(axis, repeat=k)))
    for refinement in range(REFINEMENTS + 1):
        values = _batch_energy(p, points.reshape(-1, *p.shape), delta)
        best = points[int(np.argmin(values))]
        if refinement == REFINEMENTS:
            break
        offsets = np.linspace(-step, step, 21)
        step /= 10
        points = best + np.array(list(itertools.product(offsets, repeat=k)))
    return best


def _coordinate_descent(p: Problem, delta: float, start: np.ndarray) -> np.ndarray:
    value = _objective(p, delta)
    x = np.array(start, dtype=float)
    for _ in range(MAX_SWEEPS):
        largest = 0.0
        for i in range(x.size):
            previous = x[i]

            def along(xi: float, i: int = i) -> float:
                x[i] = xi
                return value(x)

            result = minimize_scalar(
                along,
                bracket=(previous - 1e-2, previous + 1e-2),
                method="brent",
                options={"xtol": 1e-12},
            )
            x[i] = result.x if result.fun <= along(previous) else previous
            largest = max(largest, abs(x[i] - previous))
        if largest < SWEEP_XTOL:
            break
    return x


def _powell(p: Problem, delta: float, start: np.ndarray) -> np.ndarray:
    result = minimize(
        _objective(p, delta),
        start,
        method="Powell",
        bounds=[SEARCH_BOX] * start.size,
        options={"xtol": 1e-10, "ftol": 1e-15, "maxiter": 100_000},
    )
    return np.asarray(result.x, dtype=float)


def brute_force_min(tp: TinyProblem, delta: float) -> tuple[ImageField, float]:
    p = tp.problem
    delta = float(delta)
    if not math.isfinite(delta) or delta < 0:
        raise DomainError(f"delta must be >= 0, got {delta}")
    value = _objective(p, delta)
    k = tp.unknowns

    if k <= MAX_GRID_UNKNOWNS:
        primary_start = _grid_search(p, delta, k)
    else:
        fill = np.array(p.u0.values)
        fill[p.mask.values] = p.observed_values().mean(axis=0)
        primary_start = fill.ravel()
    primary = _coordinate_descent(p, delta, primary_start)
    secondary = _powell(p, delta, np.full(k, 0.5))

    primary_value = value(primary)
    secondary_value = value(secondary)
    gap = abs(primary_value - secondary_value)
    if gap > AGREEMENT_TOL * (1.0 + abs(primary_value)):
        raise OracleDisagreementError(
            f"oracle methods disagree: {primary_value:.12g} vs {secondary_value:.12g}"
        )

    best = primary if primary_value <= secondary_value else secondary
    return p.u0.with_values(best.reshape(p.shape)), min(primary_value, secondary_value)


def numeric_phi(mu: float, t: float) -> float:
    """Phi_mu(t) as a double integral of (1 + r)^(-mu) over 0 <= r <= s <= t."""
    mu = float(mu)
    t = float(t)
    if not math.isfinite(mu) or mu <= 1:
        raise DomainError(f"ellipticity exponent must be > 1, got {mu}")
    if not 0 <= t <= PHI_T_MAX:
        raise DomainError(f"t must lie in [0, {PHI_T_MAX:g}], got {t}")
    if t == 0:
        return 0.0
    value, _ = dblquad(
        lambda r, s: (1.0 + r) ** (-mu),
        0.0,
        t,
        0.0,
        lambda s: s,
        epsabs=1e-11,
        epsrel=1e-13,
    )
    return float(value)


def random_tiny_problem(
    rng: np.random.Generator,
    density: Density,
    data: DataTermProfile,
    masked: bool,
    shape: tuple[int, int] | None = None,
) -> TinyProblem:
    if shape is None:
        shape = SUITE_SHAPES[int(rng.integers(len(SUITE_SHAPES)))]
    height, width = shape
    u0 = ImageField(rng.uniform(0.0, 1.0, size=(height, width, 1)))
    mask = np.zeros(shape, dtype=bool)
    if masked:
        mask[:, : max(1, width // 2)] = True
    return TinyProblem(Problem(density, data, u0, Mask(mask)))


def compare_instance(
    tp: TinyProblem, cfg: SolverConfig
) -> tuple[float, float, float, float, float]:
    """Returns (delta, solver value, oracle value, relative value error, arg error)."""
    delta = cfg.schedule()[-1]
    u, _ = continuation(tp.problem, cfg)
    solver_value = energy(tp.problem, u, delta, cfg.DETERMINISTIC).total
    oracle_u, oracle_value = brute_force_min(tp, delta)
    rel_err = abs(solver_value - oracle_value) / max(abs(oracle_value), 1e-12)
    arg_err = float(np.max(np.abs(u.values - oracle_u.values)))
    return delta, solver_value, oracle_value, rel_err, arg_err


def oracle_suite(
    instances_per_config: int,
    cfg: SolverConfig,
    seed: int = 0,
    mu: float = 1.5,
    lam: float = 1.0,
    beta: float = 0.5,
) -> list[OracleRow]:
    if instances_per_config < 1:
        raise DomainError("instances_per_config must be >= 1")
    densities = (Density.mu_family(mu), Density.minimal_surface())
    data_terms = (DataTermProfile.quadratic(lam), DataTermProfile.linear_growth(beta))

    cases = []
    rng = np.random.default_rng(seed)
    for density, data, masked in itertools.product(densities, data_terms, (False, True)):
        for instance in range(instances_per_config):
            tp = random_tiny_problem(rng, density, data, masked)
            cases.append((density, data, masked, instance, tp))

    def run_case(case) -> OracleRow:
        density, data, masked, instance, tp = case
        delta, solver_value, oracle_value, rel_err, arg_err = compare_instance(tp, cfg)
        return OracleRow(
            density=density.kind,
            data_term=data.kind,
            masked=masked,
            instance=instance,
            shape=list(tp.problem.shape),
            delta=delta,
            solver_value=solver_value,
            oracle_value=oracle_value,
            value_rel_err=rel_err,
            arg_max_err=arg_err,
            passed=rel_err <= VALUE_RTOL and arg_err <= ARG_TOL,
        )

    if cfg.DETERMINISTIC or cfg.MAX_WORKERS == 1:
        rows = [run_case(case) for case in cases]
    else:
        with ThreadPoolExecutor(max_workers=cfg.MAX_WORKERS) as pool:
            rows = list(pool.map(run_case, cases))

    failed = sum(not row.passed for row in rows)
    if failed:
        logger.warning(
            "%d of %d oracle comparisons failed",
            failed,
            len(rows),
            extra={"component": "oracle"},
        )
    return rows
