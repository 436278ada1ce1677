from __future__ import annotations


class LingrowthError(Exception):
    code = "lingrowth_error"
    exit_code = 1


class InvalidParameterError(LingrowthError, ValueError):
    code = "invalid_parameter"
    exit_code = 2


class DomainError(InvalidParameterError):
    code = "domain_error"


class DimensionMismatchError(InvalidParameterError):
    code = "dimension_mismatch"


class UnsupportedCombinationError(InvalidParameterError):
    code = "unsupported_combination"


class InstanceTooLargeError(InvalidParameterError):
    code = "instance_too_large"


class IngestError(LingrowthError, OSError):
    code = "ingest_error"
    exit_code = 3


class SolverError(LingrowthError, RuntimeError):
    code = "solver_error"
    exit_code = 4


class NonFiniteEnergyError(SolverError):
    code = "non_finite_energy"


class OracleDisagreementError(LingrowthError, RuntimeError):
    code = "oracle_disagreement"
    exit_code = 4
