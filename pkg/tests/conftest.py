from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from lingrowth.config import SolverConfig
from lingrowth.densities import DataTermProfile, Density
from lingrowth.energy import Problem
from lingrowth.grid import ImageField, Mask


@pytest.fixture()
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture()
def solver_cfg():
    return SolverConfig(DETERMINISTIC=True, MAX_WORKERS=1)


@pytest.fixture()
def pair_problem():
    """1x2 scalar problem with u0 = (0, 2), quadratic lambda = 1, mu = 1.5."""
    u0 = ImageField(np.array([[0.0, 2.0]]))
    return Problem.denoising(
        Density.mu_family(1.5), DataTermProfile.quadratic(1.0), u0
    )


@pytest.fixture()
def noisy_problem(rng):
    def _build(
        shape: tuple[int, int] = (8, 8),
        density: Density | None = None,
        data: DataTermProfile | None = None,
        masked: bool = True,
        channels: int = 1,
    ) -> Problem:
        height, width = shape
        u0 = ImageField(rng.uniform(0.0, 1.0, size=(height, width, channels)))
        mask = np.zeros(shape, dtype=bool)
        if masked:
            mask[:, : width // 2] = True
        return Problem(
            density or Density.mu_family(1.5),
            data or DataTermProfile.quadratic(10.0),
            u0,
            Mask(mask),
        )

    return _build


@pytest.fixture()
def write_png(tmp_path):
    def _write(name: str, array: np.ndarray) -> Path:
        path = tmp_path / name
        Image.fromarray(array).save(path, format="PNG")
        return path

    return _write
