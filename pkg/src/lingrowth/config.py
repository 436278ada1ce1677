from __future__ import annotations

import math
import os
from functools import lru_cache
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from lingrowth.models import DataTermKind, DensityKind


@lru_cache
def _load_dotenv() -> None:
    candidates = [
        Path.cwd() / ".env",
        Path(__file__).resolve().parents[2] / ".env",
    ]
    env_path = next((path for path in candidates if path.is_file()), None)
    if env_path is None:
        return

    for line in env_path.read_text(encoding="utf-8").splitlines():
        raw = line.strip()
        if not raw or raw.startswith("#"):
            continue
        if raw.startswith("export "):
            raw = raw.removeprefix("export ").strip()
        if "=" not in raw:
            continue

        key, value = raw.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or key in os.environ:
            continue

        if len(value) >= 2 and value[0] == value[-1] and value[0] in {"'", '"'}:
            value = value[1:-1]

        os.environ[key] = value


class SolverConfig(BaseModel):
    MAX_ITERS: int = Field(default=5000, ge=1)
    GRAD_TOL: float | None = Field(default=None, gt=0)
    ARMIJO_C: float = Field(default=1e-4, gt=0, lt=1)
    BACKTRACK_FACTOR: float = Field(default=0.5, gt=0, lt=1)
    MAX_BACKTRACKS: int = Field(default=60, ge=1)
    LBFGS_MEMORY: int = Field(default=10, ge=0)

    DELTA_START: float = Field(default=0.1, gt=0)
    DELTA_FACTOR: float = Field(default=0.1, gt=0, lt=1)
    DELTA_STEPS: int = Field(default=4, ge=1)

    DETERMINISTIC: bool = False
    SEED: int = 0
    MAX_WORKERS: int = Field(default=4, ge=1)

    def grad_tol_for(self, pixels: int) -> float:
        if self.GRAD_TOL is not None:
            return self.GRAD_TOL
        return 1e-7 * math.sqrt(pixels)

    def schedule(self) -> list[float]:
        return [
            self.DELTA_START * self.DELTA_FACTOR**k for k in range(self.DELTA_STEPS)
        ]

    def config_snapshot(self, keys: list[str] | None = None) -> dict[str, Any]:
        data = self.model_dump(mode="json")
        if keys is None:
            return data
        return {key: data[key] for key in keys if key in data}


class RunConfig(SolverConfig):
    DENSITY: DensityKind = DensityKind.MU_FAMILY
    MU: float = Field(default=1.5, gt=1)
    DATA_TERM: DataTermKind = DataTermKind.QUADRATIC
    LAMBDA: float = Field(default=10.0, gt=0)
    BETA: float = Field(default=0.1, gt=0)
    SPACING: float = Field(default=1.0, gt=0)

    INPUT_PATH: Path | None = None
    MASK_PATH: Path | None = None
    OUTPUT_PATH: Path | None = None
    REPORT_PATH: Path | None = None

    DIAGNOSTICS: bool = False
    UNIQUENESS_TRIALS: int = Field(default=2, ge=2)


def load_settings(overrides: dict[str, Any] | None = None) -> RunConfig:
    _load_dotenv()
    data = RunConfig().model_dump()

    for key in list(data.keys()):
        if key in os.environ:
            data[key] = os.environ[key]

    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    return RunConfig.model_validate(data)
