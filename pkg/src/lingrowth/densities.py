"""Radial energy densities of linear growth and the data-term profiles.

Every density has the form F(Z) = Phi(|Z|) on nN-matrices Z, with |Z| the
Frobenius norm. Matrices are stored with the gradient index on axis -2 and
the channel index on axis -1, so a batch of matrices has shape (..., n, N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exprel
from scipy.stats import norm, qmc

from lingrowth.errors import DomainError
from lingrowth.models import (
    AuditReport,
    DataTermKind,
    DensityConstants,
    DensityKind,
)
from lingrowth.utils import ensure_finite, frobenius_norms

MINIMAL_SURFACE_MU = 3.0
SERIES_CUTOFF = 1e-4
TAYLOR_CUTOFF = 1e-6
AUDIT_DRIFT = 0.05


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not math.isfinite(mu) or mu <= 1:
        raise DomainError(f"ellipticity exponent must be > 1, got {mu}")
    return mu


def _check_t(t: float | np.ndarray) -> np.ndarray:
    array = ensure_finite(t, "t")
    if np.any(array < 0):
        raise DomainError("profile argument must be >= 0")
    return array


def _scalar_or_array(values: np.ndarray, like: float | np.ndarray) -> float | np.ndarray:
    if np.ndim(like) == 0:
        return float(values)
    return values


def _phi_value(mu: float, t: np.ndarray) -> np.ndarray:
    log1p_t = np.log1p(t)
    closed = (t - log1p_t * exprel((2.0 - mu) * log1p_t)) / (mu - 1.0)
    # t - log1p(t)·exprel(...) cancels for tiny t; the series is exact to O(t^5)
    series = t * t / 2.0 - mu * t**3 / 6.0 + mu * (mu + 1.0) * t**4 / 24.0
    return np.where(t < SERIES_CUTOFF, series, closed)


def _phi_deriv(mu: float, t: np.ndarray) -> np.ndarray:
    return -np.expm1((1.0 - mu) * np.log1p(t)) / (mu - 1.0)


def _phi_second(mu: float, t: np.ndarray) -> np.ndarray:
    return np.exp(-mu * np.log1p(t))


def _phi_tangential(mu: float, t: np.ndarray) -> np.ndarray:
    safe = np.where(t < TAYLOR_CUTOFF, 1.0, t)
    ratio = _phi_deriv(mu, safe) / safe
    return np.where(t < TAYLOR_CUTOFF, 1.0 - mu * t / 2.0, ratio)


def phi_value(mu: float, t: float | np.ndarray) -> float | np.ndarray:
    """Phi_mu(t), the double integral of (1 + r)^(-mu)."""
    mu = _check_mu(mu)
    return _scalar_or_array(_phi_value(mu, _check_t(t)), t)


def phi_deriv(mu: float, t: float | np.ndarray) -> float | np.ndarray:
    mu = _check_mu(mu)
    return _scalar_or_array(_phi_deriv(mu, _check_t(t)), t)


def phi_second(mu: float, t: float | np.ndarray) -> float | np.ndarray:
    mu = _check_mu(mu)
    return _scalar_or_array(_phi_second(mu, _check_t(t)), t)


@dataclass(frozen=True)
class Density:
    kind: DensityKind
    mu: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DensityKind(self.kind))
        mu = _check_mu(self.mu)
        if self.kind is DensityKind.MINIMAL_SURFACE and mu != MINIMAL_SURFACE_MU:
            raise DomainError("the minimal-surface density has mu fixed to 3")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def mu_family(cls, mu: float) -> Density:
        return cls(DensityKind.MU_FAMILY, mu)

    @classmethod
    def minimal_surface(cls) -> Density:
        return cls(DensityKind.MINIMAL_SURFACE, MINIMAL_SURFACE_MU)

    def profile(self, t: np.ndarray) -> np.ndarray:
        if self.kind is DensityKind.MU_FAMILY:
            return _phi_value(self.mu, t)
        return t * t / (np.sqrt(1.0 + t * t) + 1.0)

    def profile_deriv(self, t: np.ndarray) -> np.ndarray:
        if self.kind is DensityKind.MU_FAMILY:
            return _phi_deriv(self.mu, t)
        return t / np.sqrt(1.0 + t * t)

    def profile_second(self, t: np.ndarray) -> np.ndarray:
        if self.kind is DensityKind.MU_FAMILY:
            return _phi_second(self.mu, t)
        return (1.0 + t * t) ** -1.5

    def tangential(self, t: np.ndarray) -> np.ndarray:
        """Phi'(t)/t, continuously extended by Phi''(0) at t = 0."""
        if self.kind is DensityKind.MU_FAMILY:
            return _phi_tangential(self.mu, t)
        return 1.0 / np.sqrt(1.0 + t * t)

    @property
    def curvature_bound(self) -> float:
        # sup of Phi'' and Phi'/t; both are attained at t = 0
        return 1.0


def density_value(d: Density, Z: np.ndarray) -> float | np.ndarray:
    Z = ensure_finite(Z, "Z")
    values = d.profile(frobenius_norms(Z))
    return float(values) if np.ndim(values) == 0 else values


def density_gradient(d: Density, Z: np.ndarray) -> np.ndarray:
    Z = ensure_finite(Z, "Z")
    scale = d.tangential(frobenius_norms(Z))
    return np.asarray(scale)[..., None, None] * Z


def density_hessian_form(
    d: Density, Z: np.ndarray, X: np.ndarray
) -> float | np.ndarray:
    Z = ensure_finite(Z, "Z")
    X = ensure_finite(X, "X")
    t = frobenius_norms(Z)
    inner = np.sum(Z * X, axis=(-2, -1))
    x_sq = np.sum(X * X, axis=(-2, -1))
    t_sq = t * t
    radial_sq = np.divide(
        inner * inner, t_sq, out=np.zeros_like(inner), where=t_sq > 0
    )
    form = d.profile_second(t) * radial_sq + d.tangential(t) * (x_sq - radial_sq)
    return float(form) if np.ndim(form) == 0 else form


def constants(d: Density) -> DensityConstants:
    if d.kind is DensityKind.MINIMAL_SURFACE:
        t_star = 1.0 / math.sqrt(3.0)
        nu2 = 0.5
        nu3 = nu2 * t_star - (math.sqrt(1.0 + t_star**2) - 1.0)
        return DensityConstants(nu1=1.0, nu2=nu2, nu3=nu3, nu4=1.0, nu5=math.sqrt(2.0))

    mu = d.mu
    nu1 = 1.0 / (mu - 1.0)
    nu2 = nu1 / 2.0
    # Phi'(t*) = nu2  <=>  (1 + t*)^(1 - mu) = 1/2
    t_star = 2.0 ** (1.0 / (mu - 1.0)) - 1.0
    nu3 = nu2 * t_star - float(_phi_value(mu, np.asarray(t_star)))
    return DensityConstants(nu1=nu1, nu2=nu2, nu3=nu3, nu4=1.0, nu5=max(1.0, nu1))


def _audit_samples(
    count: int, radius: float, channels: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    dims = 2 * channels
    sampler = qmc.Halton(d=1 + 2 * dims, scramble=True, seed=seed)
    points = sampler.random(count)
    points = np.clip(points, 1e-12, 1.0 - 1e-12)

    # log-spaced radii so that small and large |Z| are equally represented
    t = np.expm1(points[:, 0] * math.log1p(radius))
    t = np.concatenate([t, [0.0, radius]])

    directions = norm.ppf(points[:, 1 : 1 + dims])
    directions = np.vstack([directions, directions[:2]])
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    Z = (t[:, None] * directions).reshape(-1, 2, channels)

    X = norm.ppf(points[:, 1 + dims :])
    X = np.vstack([X, X[:2]]).reshape(-1, 2, channels)
    return Z, X


def _audit_ratios(
    d: Density, Z: np.ndarray, X_random: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    t = frobenius_norms(Z)
    x_sq = np.sum(X_random * X_random, axis=(-2, -1))
    random_ratio = density_hessian_form(d, Z, X_random) / x_sq
    # exact eigenvalues of D^2F(Z): Phi'' along Z and Phi'/t across it
    radial = d.profile_second(t)
    tangential = d.tangential(t)
    lower = np.minimum(np.minimum(random_ratio, radial), tangential)
    upper = np.maximum(np.maximum(random_ratio, radial), tangential)
    return t, np.stack([lower, upper])


def _audit_constants(
    d: Density, audit_mu: float, count: int, radius: float, channels: int, seed: int
) -> tuple[float, float]:
    Z, X = _audit_samples(count, radius, channels, seed)
    t, (lower, upper) = _audit_ratios(d, Z, X)
    nu4_hat = float(np.min(lower * (1.0 + t) ** audit_mu))
    nu5_hat = float(np.max(upper * (1.0 + t)))
    return nu4_hat, nu5_hat


def _drift(a: float, b: float) -> float:
    if not (math.isfinite(a) and math.isfinite(b)):
        return math.inf
    scale = max(abs(a), abs(b))
    if scale == 0:
        return 0.0
    return abs(a - b) / scale


def ellipticity_audit(
    d: Density,
    sample_count: int,
    audit_mu: float | None = None,
    radius: float = 1e3,
    channels: int = 1,
    seed: int = 0,
) -> AuditReport:
    if sample_count < 1:
        raise DomainError("sample_count must be >= 1")
    if radius <= 0:
        raise DomainError("radius must be > 0")
    mu = d.mu if audit_mu is None else _check_mu(audit_mu)

    nu4, nu5 = _audit_constants(d, mu, sample_count, radius, channels, seed)
    nu4_doubled, nu5_doubled = _audit_constants(
        d, mu, 2 * sample_count, radius, channels, seed
    )
    nu4_wide, _ = _audit_constants(
        d, mu, sample_count, 10.0 * radius, channels, seed
    )

    drift = max(
        _drift(nu4, nu4_doubled),
        _drift(nu5, nu5_doubled),
        _drift(nu4, nu4_wide),
    )
    passed = nu4 > 0 and math.isfinite(nu5) and drift < AUDIT_DRIFT
    return AuditReport(
        density=d.kind,
        mu=d.mu,
        audit_mu=mu,
        sample_count=sample_count,
        radius=radius,
        nu4_hat=nu4,
        nu5_hat=nu5,
        nu4_hat_doubled=nu4_doubled,
        nu5_hat_doubled=nu5_doubled,
        nu4_hat_wide=nu4_wide,
        drift=drift,
        passed=passed,
    )


@dataclass(frozen=True)
class DataTermProfile:
    kind: DataTermKind
    lam: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DataTermKind(self.kind))
        if self.kind is DataTermKind.QUADRATIC and not self.lam > 0:
            raise DomainError(f"lambda must be > 0, got {self.lam}")
        if self.kind is DataTermKind.LINEAR_GROWTH and not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")

    @classmethod
    def quadratic(cls, lam: float) -> DataTermProfile:
        return cls(DataTermKind.QUADRATIC, lam=lam)

    @classmethod
    def linear_growth(cls, beta: float) -> DataTermProfile:
        return cls(DataTermKind.LINEAR_GROWTH, beta=beta)

    def value(self, t: np.ndarray) -> np.ndarray:
        if self.kind is DataTermKind.QUADRATIC:
            return 0.5 * self.lam * t * t
        return t * t / (np.sqrt(self.beta**2 + t * t) + self.beta)

    def deriv(self, t: np.ndarray) -> np.ndarray:
        if self.kind is DataTermKind.QUADRATIC:
            return self.lam * t
        return t / np.sqrt(self.beta**2 + t * t)

    def deriv_over_t(self, t: np.ndarray) -> np.ndarray:
        """omega'(t)/t, finite at t = 0."""
        if self.kind is DataTermKind.QUADRATIC:
            return np.full_like(t, self.lam, dtype=float)
        return 1.0 / np.sqrt(self.beta**2 + t * t)

    @property
    def curvature_bound(self) -> float:
        if self.kind is DataTermKind.QUADRATIC:
            return self.lam
        return 1.0 / self.beta


def data_term_value(p: DataTermProfile, t: float | np.ndarray) -> float | np.ndarray:
    return _scalar_or_array(p.value(_check_t(t)), t)


def data_term_deriv(p: DataTermProfile, t: float | np.ndarray) -> float | np.ndarray:
    return _scalar_or_array(p.deriv(_check_t(t)), t)
