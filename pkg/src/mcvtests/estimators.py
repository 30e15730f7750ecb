"""Per-group moment estimation and large-sample variances.

For a group of d-dimensional observations the point estimates are

* ``mcv``       : 1 / sqrt(mean' cov^{-1} mean), the multivariate
                  coefficient of variation, and
* ``std_mean``  : sqrt(mean' cov^{-1} mean), the standardized mean,

with the covariance estimated using divisor n (not n-1); the permutation
theory is derived for that normalization and there is no knob to change it.

The large-sample variance of the MCV is a delta-method sandwich: the
gradient of the quadratic form with respect to the raw moments
(mean coordinates followed by all d^2 pairwise products, pair (a, r) at
position (a-1)d + r) multiplied with the covariance matrix of those raw
moments, assembled from the blocks ``cov``, ``cross_cov`` and
``product_cov``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateVariance, SingularCovariance, ZeroMean

ZERO_MEAN_RTOL = 1e-12
DEGENERATE_VARIANCE_TOL = 1e-14

__all__ = [
    "GroupSample",
    "GroupMoments",
    "AugmentedMoments",
    "GroupEstimates",
    "pairwise_products",
    "estimate_moments",
    "mcv_and_std_mean",
    "centering_jacobian",
    "augmented_moments",
    "quad_form_gradient",
    "mcv_variance",
    "asymptotic_variances",
]


@dataclass(frozen=True)
class GroupSample:
    """Observations of one design cell: an (n, d) array plus a cell label."""

    data: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("group data must be a non-empty (n, d) array")
        if not np.all(np.isfinite(data)):
            raise ValueError(f"group {self.label!r}: non-finite observation values")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GroupMoments:
    mean: np.ndarray  # (d,)
    cov: np.ndarray  # (d, d), divisor n
    quad_form: float  # mean' cov^{-1} mean


@dataclass(frozen=True)
class AugmentedMoments:
    """Covariance blocks of the augmented observation (X, products X_a X_r)
    plus the delta-method gradient of the quadratic form.

    ``cross_cov``    : (d^2, d)   Cov(X_a X_r, X_s)
    ``product_cov``  : (d^2, d^2) Cov(X_a X_r, X_b X_s)
    ``center_jacobian``: (d^2, d) derivative of the centered covariance
                         entries with respect to the mean vector
    ``gradient``     : (d + d^2,) gradient of mean' cov^{-1} mean in the
                       raw-moment coordinates
    """

    cross_cov: np.ndarray
    product_cov: np.ndarray
    center_jacobian: np.ndarray
    gradient: np.ndarray


@dataclass(frozen=True)
class GroupEstimates:
    """Point estimates and asymptotic variances for one group."""

    mcv: float
    std_mean: float
    var_mcv: float
    var_std_mean: float
    weight: float  # n_i / n
    n: int = 0
    label: str = ""


def pairwise_products(x: np.ndarray) -> np.ndarray:
    """All pairwise coordinate products, pair (a, r) in row-major order."""
    n, d = x.shape
    return (x[:, :, None] * x[:, None, :]).reshape(n, d * d)


def estimate_moments(sample: GroupSample) -> GroupMoments:
    """Mean, covariance (divisor n) and quadratic form of one group.

    Raises :class:`SingularCovariance` when the covariance matrix is not
    positive definite (certain whenever n <= d) and :class:`ZeroMean` when
    the mean vector is zero relative to the data scale.
    """
    x = sample.data
    n, d = x.shape
    mean = x.mean(axis=0)
    scale = float(np.abs(x).max())
    if scale == 0.0 or float(np.linalg.norm(mean)) <= ZERO_MEAN_RTOL * scale:
        raise ZeroMean(f"group {sample.label!r}: mean vector is numerically zero")
    centered = x - mean
    cov = centered.T @ centered / n
    try:
        factor = scipy.linalg.cho_factor(cov, lower=True)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise SingularCovariance(
            f"group {sample.label!r}: covariance matrix is not positive definite"
        ) from exc
    solved = scipy.linalg.cho_solve(factor, mean)
    quad_form = float(mean @ solved)
    return GroupMoments(mean=mean, cov=cov, quad_form=quad_form)


def mcv_and_std_mean(moments: GroupMoments) -> tuple[float, float]:
    """(MCV, standardized mean); the two are exact reciprocals."""
    std_mean = float(np.sqrt(moments.quad_form))
    return 1.0 / std_mean, std_mean


def centering_jacobian(x: np.ndarray) -> np.ndarray:
    """Derivative of the centered covariance entries with respect to the mean.

    Row (a, r) (at index (a-1)d + r) holds the gradient of ``-x_a x_r``;
    evaluated at the mean it converts raw-moment fluctuations into
    fluctuations of the centered covariance.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.shape[0]
    jac = np.zeros((d * d, d))
    for a in range(d):
        for r in range(d):
            row = a * d + r
            if a == r:
                jac[row, a] = -2.0 * x[a]
            else:
                jac[row, a] = -x[r]
                jac[row, r] = -x[a]
    return jac


def quad_form_gradient(mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Gradient of mean' cov^{-1} mean in the raw-moment coordinates.

    The first d entries differentiate with respect to the mean (including
    the induced recentering of the covariance); the remaining d^2 entries
    differentiate with respect to the raw pairwise products.
    """
    w = np.linalg.solve(cov, mean)
    ww = np.kron(w, w)
    return np.concatenate([2.0 * w - ww @ centering_jacobian(mean), -ww])


def augmented_moments(sample: GroupSample, moments: GroupMoments) -> AugmentedMoments:
    """Empirical covariance blocks of (X, pairwise products) for one group."""
    x = sample.data
    n = x.shape[0]
    products = pairwise_products(x)
    pc = products - products.mean(axis=0)
    xc = x - moments.mean
    cross_cov = pc.T @ xc / n
    product_cov = pc.T @ pc / n
    return AugmentedMoments(
        cross_cov=cross_cov,
        product_cov=product_cov,
        center_jacobian=centering_jacobian(moments.mean),
        gradient=quad_form_gradient(moments.mean, moments.cov),
    )


def mcv_variance(
    mean: np.ndarray,
    cov: np.ndarray,
    cross_cov: np.ndarray,
    product_cov: np.ndarray,
    weight: float = 1.0,
) -> float:
    """Asymptotic variance of the MCV from (population or empirical) moments.

    ``weight`` is the group's share of the total sample size, so the value
    scales the per-group limit variance to the pooled-rate normalization.
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    cov = np.asarray(cov, dtype=float)
    d = mean.shape[0]
    grad = quad_form_gradient(mean, cov)
    gm, gp = grad[:d], grad[d:]
    quad_form = float(mean @ np.linalg.solve(cov, mean))
    sandwich = float(gm @ cov @ gm + 2.0 * (gp @ cross_cov @ gm) + gp @ product_cov @ gp)
    return quad_form ** -3 * sandwich / (4.0 * weight)


def asymptotic_variances(sample: GroupSample, total_n: int) -> GroupEstimates:
    """Full per-group estimates: MCV, standardized mean and their variances.

    Raises :class:`DegenerateVariance` when the estimated MCV variance is
    (numerically) zero, which happens exactly for the conditionally
    two-point-supported samples excluded by the theory.
    """
    if total_n < sample.n:
        raise ValueError("total_n must be at least the group size")
    if sample.n < sample.d + 2:
        raise SingularCovariance(
            f"group {sample.label!r}: variance estimation needs at least "
            f"d + 2 = {sample.d + 2} observations, got {sample.n}"
        )
    moments = estimate_moments(sample)
    aug = augmented_moments(sample, moments)
    d = sample.d
    gm, gp = aug.gradient[:d], aug.gradient[d:]
    sandwich = float(
        gm @ moments.cov @ gm + 2.0 * (gp @ aug.cross_cov @ gm) + gp @ aug.product_cov @ gp
    )
    weight = sample.n / total_n
    var_mcv = moments.quad_form ** -3 * sandwich / (4.0 * weight)
    if var_mcv <= DEGENERATE_VARIANCE_TOL:
        raise DegenerateVariance(
            f"group {sample.label!r}: estimated MCV variance {var_mcv:.3g} is degenerate"
        )
    mcv, std_mean = mcv_and_std_mean(moments)
    return GroupEstimates(
        mcv=mcv,
        std_mean=std_mean,
        var_mcv=var_mcv,
        var_std_mean=moments.quad_form**2 * var_mcv,
        weight=weight,
        n=sample.n,
        label=sample.label,
    )
