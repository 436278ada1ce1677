from __future__ import annotations

import enum
from typing import Any

from pydantic import BaseModel, Field, computed_field


class DensityKind(str, enum.Enum):
    MU_FAMILY = "mu-family"
    MINIMAL_SURFACE = "minimal-surface"


class DataTermKind(str, enum.Enum):
    QUADRATIC = "quadratic"
    LINEAR_GROWTH = "linear-growth"


class TerminationReason(str, enum.Enum):
    STATIONARY = "stationary"
    MAX_ITERS = "max_iters"
    STALLED = "stalled"


class Theorem(str, enum.Enum):
    T1_1 = "T1_1"
    T1_2 = "T1_2"
    T1_3 = "T1_3"
    T1_4 = "T1_4"


class EnergyBreakdown(BaseModel):
    regularizer: float
    fidelity: float
    tikhonov: float
    total: float


class IterationRecord(BaseModel):
    stage: int
    delta: float
    iteration: int
    energy: EnergyBreakdown
    grad_norm: float
    step: float
    max_sigma: float


class StageRecord(BaseModel):
    stage: int
    delta: float
    iterations: int
    termination: TerminationReason
    grad_norm: float
    k_value: float
    k_delta_value: float
    sup_norm: float
    w11_norm: float


class SolverTrace(BaseModel):
    iterations: list[IterationRecord] = Field(default_factory=list)
    stages: list[StageRecord] = Field(default_factory=list)

    @computed_field
    @property
    def termination(self) -> TerminationReason | None:
        if not self.stages:
            return None
        return self.stages[-1].termination

    def k_values(self) -> list[float]:
        return [stage.k_value for stage in self.stages]

    def k_delta_values(self) -> list[float]:
        return [stage.k_delta_value for stage in self.stages]

    def extend(self, other: SolverTrace) -> None:
        self.iterations.extend(other.iterations)
        self.stages.extend(other.stages)


class DensityConstants(BaseModel):
    nu1: float
    nu2: float
    nu3: float
    nu4: float
    nu5: float


class AuditReport(BaseModel):
    density: DensityKind
    mu: float
    audit_mu: float
    sample_count: int
    radius: float
    nu4_hat: float
    nu5_hat: float
    nu4_hat_doubled: float
    nu5_hat_doubled: float
    nu4_hat_wide: float
    drift: float
    passed: bool = Field(serialization_alias="pass")


class ExponentReport(BaseModel):
    n: int
    mu: float
    theorem: Theorem
    empty_mask: bool
    admissible: bool
    p: float | None
    s: float | None
    p_is_bound: bool
    s_is_bound: bool
    mu_bound: float


class MaxPrincipleResult(BaseModel):
    sup_u: float
    sup_u0: float
    passed: bool = Field(serialization_alias="pass")


class DualBoundResult(BaseModel):
    max_sigma: float
    nu1: float
    passed: bool = Field(serialization_alias="pass")


class UniquenessResult(BaseModel):
    trials: int
    max_dev_off_D: float
    max_dev_all: float
    tolerance: float
    passed: bool = Field(serialization_alias="pass")


class MinimizingSequenceResult(BaseModel):
    k_values: list[float]
    k_delta_values: list[float]
    k_monotone: bool
    k_delta_monotone: bool
    sandwich: bool
    passed: bool = Field(serialization_alias="pass")


class StageBoundsResult(BaseModel):
    sup_linf: float
    sup_w11: float
    bound: float
    passed: bool = Field(serialization_alias="pass")


class NormEntry(BaseModel):
    p: float
    norm: float


class DiagnosticsReport(BaseModel):
    max_principle: MaxPrincipleResult
    dual_bound: DualBoundResult
    uniqueness: UniquenessResult | None
    minimizing_sequence: MinimizingSequenceResult | None
    stage_bounds: StageBoundsResult | None
    grad_integrability: list[NormEntry]
    hessian_integrability: list[NormEntry]

    @computed_field(alias="pass")
    @property
    def passed(self) -> bool:
        checks = [self.max_principle.passed, self.dual_bound.passed]
        for optional in (self.uniqueness, self.minimizing_sequence, self.stage_bounds):
            if optional is not None:
                checks.append(optional.passed)
        return all(checks)


class ImageInfo(BaseModel):
    width: int
    height: int
    channels: int
    bit_depth: int
    masked_pixels: int


class RunReport(BaseModel):
    config: dict[str, Any]
    image: ImageInfo
    trace: SolverTrace
    final_energy: EnergyBreakdown
    exponents: list[ExponentReport]
    diagnostics: DiagnosticsReport | None
    output_path: str


class OracleRow(BaseModel):
    density: DensityKind
    data_term: DataTermKind
    masked: bool
    instance: int
    shape: list[int]
    delta: float
    solver_value: float
    oracle_value: float
    value_rel_err: float
    arg_max_err: float
    passed: bool = Field(serialization_alias="pass")
