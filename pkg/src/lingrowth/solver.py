from __future__ import annotations

import math
from collections import deque

import numpy as np
from scipy.optimize import LbfgsInvHessProduct

from lingrowth.config import SolverConfig
from lingrowth.energy import (
    Problem,
    breakdown_from_values,
    gradient_from_values,
    preconditioner_diagonal,
)
from lingrowth.errors import DomainError, NonFiniteEnergyError
from lingrowth.grid import ImageField, check_same_grid, gradient_values
from lingrowth.logging import get_logger
from lingrowth.models import (
    EnergyBreakdown,
    IterationRecord,
    SolverTrace,
    StageRecord,
    TerminationReason,
)
from lingrowth.utils import frobenius_norms, pixel_norms, reduce_sum

logger = get_logger(__name__)

CURVATURE_EPS = 1e-12
MONOTONE_RTOL = 1e-8


def default_init(p: Problem) -> ImageField:
    values = np.array(p.u0.values)
    mean = p.observed_values().mean(axis=0)
    values[p.mask.values] = mean
    return p.u0.with_values(values)


def constant_data_value(p: Problem) -> np.ndarray | None:
    observed = p.observed_values()
    if np.all(observed == observed[0]):
        return observed[0]
    return None


def _max_sigma(p: Problem, values: np.ndarray) -> float:
    t = frobenius_norms(gradient_values(values, p.spacing))
    return float(np.max(p.density.profile_deriv(t)))


def _check_total(breakdown: EnergyBreakdown, delta: float) -> None:
    if not math.isfinite(breakdown.total):
        raise NonFiniteEnergyError(
            f"non-finite energy {breakdown.total} encountered at delta={delta}"
        )


def _stage_record(
    p: Problem,
    stage: int,
    delta: float,
    values: np.ndarray,
    breakdown: EnergyBreakdown,
    iterations: int,
    termination: TerminationReason,
    grad_norm: float,
    deterministic: bool,
) -> StageRecord:
    area = p.spacing**2
    grad_t = frobenius_norms(gradient_values(values, p.spacing))
    w11 = reduce_sum(area * (pixel_norms(values) + grad_t), deterministic)
    return StageRecord(
        stage=stage,
        delta=delta,
        iterations=iterations,
        termination=termination,
        grad_norm=grad_norm,
        k_value=breakdown.regularizer + breakdown.fidelity,
        k_delta_value=breakdown.total,
        sup_norm=float(np.max(pixel_norms(values))),
        w11_norm=w11,
    )


def _record(
    p: Problem,
    stage: int,
    delta: float,
    iteration: int,
    values: np.ndarray,
    breakdown: EnergyBreakdown,
    grad_norm: float,
    step: float,
) -> IterationRecord:
    return IterationRecord(
        stage=stage,
        delta=delta,
        iteration=iteration,
        energy=breakdown,
        grad_norm=grad_norm,
        step=step,
        max_sigma=_max_sigma(p, values),
    )


def _search_direction(
    grad: np.ndarray,
    scale: np.ndarray,
    s_hist: deque[np.ndarray],
    y_hist: deque[np.ndarray],
) -> np.ndarray:
    # quasi-Newton in the variables v = P^(1/2) u, identity initial inverse Hessian
    g_scaled = grad.ravel() / scale
    if s_hist:
        operator = LbfgsInvHessProduct(np.array(s_hist), np.array(y_hist))
        d_scaled = -np.asarray(operator.matvec(g_scaled)).ravel()
    else:
        d_scaled = -g_scaled
    return (d_scaled / scale).reshape(grad.shape)


def minimize_fixed_delta(
    p: Problem,
    delta: float,
    init: ImageField,
    cfg: SolverConfig,
    stage: int = 0,
) -> tuple[ImageField, SolverTrace]:
    """Minimize K_delta from ``init`` by preconditioned quasi-Newton descent."""
    delta = float(delta)
    if not delta > 0:
        raise DomainError(f"delta must be > 0 for a regularized stage, got {delta}")
    check_same_grid(p.u0, init, name="init")
    deterministic = cfg.DETERMINISTIC
    tol = cfg.grad_tol_for(p.pixels)
    trace = SolverTrace()

    constant = constant_data_value(p)
    if constant is not None:
        values = np.broadcast_to(constant, p.shape).copy()
        breakdown = breakdown_from_values(p, values, delta, deterministic)
        trace.iterations.append(_record(p, stage, delta, 0, values, breakdown, 0.0, 0.0))
        trace.stages.append(
            _stage_record(
                p,
                stage,
                delta,
                values,
                breakdown,
                0,
                TerminationReason.STATIONARY,
                0.0,
                deterministic,
            )
        )
        return init.with_values(values), trace

    values = np.array(init.values)
    scale = np.sqrt(preconditioner_diagonal(p, delta)).ravel()
    s_hist: deque[np.ndarray] = deque(maxlen=cfg.LBFGS_MEMORY)
    y_hist: deque[np.ndarray] = deque(maxlen=cfg.LBFGS_MEMORY)

    breakdown = breakdown_from_values(p, values, delta, deterministic)
    _check_total(breakdown, delta)
    grad = gradient_from_values(p, values, delta)
    grad_norm = float(np.max(np.abs(grad)))
    trace.iterations.append(_record(p, stage, delta, 0, values, breakdown, grad_norm, 0.0))

    step = 0.5
    iteration = 0
    termination = TerminationReason.MAX_ITERS
    while True:
        if grad_norm <= tol:
            termination = TerminationReason.STATIONARY
            break
        if iteration >= cfg.MAX_ITERS:
            termination = TerminationReason.MAX_ITERS
            break

        direction = _search_direction(grad, scale, s_hist, y_hist)
        slope = float(np.sum(grad * direction))
        if not slope < 0:
            s_hist.clear()
            y_hist.clear()
            direction = _search_direction(grad, scale, s_hist, y_hist)
            slope = float(np.sum(grad * direction))

        alpha = min(1.0, 2.0 * step)
        accepted: EnergyBreakdown | None = None
        for _ in range(cfg.MAX_BACKTRACKS):
            candidate = values + alpha * direction
            trial = breakdown_from_values(p, candidate, delta, deterministic)
            _check_total(trial, delta)
            if trial.total <= breakdown.total + cfg.ARMIJO_C * alpha * slope:
                accepted = trial
                break
            alpha *= cfg.BACKTRACK_FACTOR

        if accepted is None:
            if s_hist:
                s_hist.clear()
                y_hist.clear()
                continue
            termination = TerminationReason.STALLED
            logger.warning(
                "line search stalled at delta=%g after %d iterations",
                delta,
                iteration,
                extra={"component": "solver", "stage": stage, "delta": delta},
            )
            break

        new_grad = gradient_from_values(p, candidate, delta)
        s_vec = scale * (candidate - values).ravel()
        y_vec = (new_grad - grad).ravel() / scale
        if float(np.dot(s_vec, y_vec)) > CURVATURE_EPS * float(np.dot(s_vec, s_vec)):
            s_hist.append(s_vec)
            y_hist.append(y_vec)

        values = candidate
        grad = new_grad
        breakdown = accepted
        grad_norm = float(np.max(np.abs(grad)))
        step = alpha
        iteration += 1
        trace.iterations.append(
            _record(p, stage, delta, iteration, values, breakdown, grad_norm, alpha)
        )
        logger.debug(
            "accepted step",
            extra={
                "component": "solver",
                "stage": stage,
                "delta": delta,
                "iteration": iteration,
                "energy": breakdown.total,
                "grad_norm": grad_norm,
            },
        )

    trace.stages.append(
        _stage_record(
            p,
            stage,
            delta,
            values,
            breakdown,
            iteration,
            termination,
            grad_norm,
            deterministic,
        )
    )
    return init.with_values(values), trace


def continuation(
    p: Problem, cfg: SolverConfig, init: ImageField | None = None
) -> tuple[ImageField, SolverTrace]:
    """Solve K_delta along delta_k = DELTA_START * DELTA_FACTOR**k, warm-starting."""
    u = default_init(p) if init is None else init
    trace = SolverTrace()
    for stage, delta in enumerate(cfg.schedule()):
        u, stage_trace = minimize_fixed_delta(p, delta, u, cfg, stage=stage)
        trace.extend(stage_trace)
        record = trace.stages[-1]
        logger.info(
            "stage finished: K=%.12g K_delta=%.12g",
            record.k_value,
            record.k_delta_value,
            extra={
                "component": "solver",
                "stage": stage,
                "delta": delta,
                "iteration": record.iterations,
                "grad_norm": record.grad_norm,
                "termination": record.termination.value,
            },
        )
        if stage > 0:
            previous = trace.stages[-2].k_value
            if record.k_value > previous + MONOTONE_RTOL * (1.0 + abs(previous)):
                logger.warning(
                    "K increased along the continuation: %.12g -> %.12g",
                    previous,
                    record.k_value,
                    extra={"component": "solver", "stage": stage, "delta": delta},
                )
    return u, trace
