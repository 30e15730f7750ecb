"""Chi-square evaluation and sampling from the simulation populations.

Three elliptical families are supported: multivariate normal, multivariate
power exponential with tail exponent ``beta``, and multivariate Student t
with ``nu`` degrees of freedom.  Each family is rescaled so that the drawn
vectors have expectation ``mean`` and covariance exactly ``cov`` (not merely
scale parameter ``cov``); the Student t needs ``nu > 4`` so all fourth
moments exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.special

from .errors import DomainError

__all__ = [
    "chi2_cdf",
    "chi2_sf",
    "chi2_quantile",
    "PopulationSpec",
    "sample_population",
    "scenario_mean_vector",
]

FAMILIES = ("normal", "power_exponential", "student_t")


def chi2_cdf(x: float, df: int) -> float:
    """Chi-square CDF via the regularized lower incomplete gamma function."""
    if df < 1:
        raise DomainError(f"df must be >= 1, got {df}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    return float(scipy.special.gammainc(df / 2.0, x / 2.0))


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail chi-square probability (1 - CDF, computed without cancellation)."""
    if df < 1:
        raise DomainError(f"df must be >= 1, got {df}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    return float(scipy.special.gammaincc(df / 2.0, x / 2.0))


def chi2_quantile(p: float, df: int) -> float:
    """Inverse chi-square CDF by monotone root finding, |error| <= 1e-10."""
    if df < 1:
        raise DomainError(f"df must be >= 1, got {df}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must be in (0, 1), got {p}")
    hi = df + 10.0 * math.sqrt(2.0 * df) + 10.0
    while chi2_cdf(hi, df) < p:
        hi *= 2.0
    return float(scipy.optimize.brentq(lambda x: chi2_cdf(x, df) - p, 0.0, hi, xtol=1e-10))


@dataclass(frozen=True, eq=False)
class PopulationSpec:
    """One group's sampling population.

    ``family`` is one of ``normal``, ``power_exponential`` (requires
    ``shape`` = tail exponent beta > 0) or ``student_t`` (requires
    ``shape`` = degrees of freedom nu > 4).
    """

    family: str
    mean: np.ndarray
    cov: np.ndarray
    shape: float | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise DomainError(f"cov must be ({mean.size}, {mean.size}), got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise DomainError("mean/cov must be finite")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise DomainError("cov must be positive definite") from exc
        if self.family == "power_exponential":
            if self.shape is None or self.shape <= 0:
                raise DomainError("power_exponential requires shape (beta) > 0")
        if self.family == "student_t":
            if self.shape is None or self.shape <= 4:
                raise DomainError("student_t requires shape (nu) > 4 for finite fourth moments")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def d(self) -> int:
        return self.mean.size


def _power_exponential_cov_factor(d: int, beta: float) -> float:
    # Cov(X) = factor * V for X = mu + R V^{1/2} U with R = (2 G)^{1/(2 beta)},
    # G ~ Gamma(d / (2 beta)); reduces to 1 at beta = 1 (the normal case).
    log_factor = (
        math.log(2.0) / beta
        + math.lgamma((d + 2.0) / (2.0 * beta))
        - math.lgamma(d / (2.0 * beta))
        - math.log(d)
    )
    return math.exp(log_factor)


def sample_population(spec: PopulationSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. vectors with E X = mean and Cov X = cov exactly."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    d = spec.d
    if spec.family == "normal":
        chol = np.linalg.cholesky(spec.cov)
        return spec.mean + rng.standard_normal((n, d)) @ chol.T
    if spec.family == "student_t":
        nu = float(spec.shape)
        chol = np.linalg.cholesky(spec.cov * (nu - 2.0) / nu)
        z = rng.standard_normal((n, d)) @ chol.T
        w = rng.chisquare(nu, size=n)
        return spec.mean + z * np.sqrt(nu / w)[:, None]
    beta = float(spec.shape)
    chol = np.linalg.cholesky(spec.cov / _power_exponential_cov_factor(d, beta))
    z = rng.standard_normal((n, d))
    u = z / np.linalg.norm(z, axis=1, keepdims=True)
    g = rng.standard_gamma(d / (2.0 * beta), size=n)
    r = (2.0 * g) ** (1.0 / (2.0 * beta))
    return spec.mean + r[:, None] * (u @ chol.T)


def scenario_mean_vector(which: str, c: float, d: int, n: int) -> np.ndarray:
    """Mean vectors used by the simulation scenarios for a target MCV ``c``.

    ``mu1`` puts all mass on the first coordinate, (1/c, 0, ..., 0);
    ``mu2`` spreads it evenly and shrinks with the total sample size,
    (1/c) * 1_d / sqrt(n).
    """
    if c <= 0:
        raise DomainError(f"c must be > 0, got {c}")
    if which == "mu1":
        mean = np.zeros(d)
        mean[0] = 1.0 / c
        return mean
    if which == "mu2":
        return np.full(d, 1.0 / (c * math.sqrt(n)))
    raise DomainError(f"unknown mean vector kind {which!r}; expected 'mu1' or 'mu2'")
