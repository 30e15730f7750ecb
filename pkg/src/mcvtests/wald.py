"""Wald-type statistics and the asymptotic chi-square test.

The statistic is the studentized quadratic form

    n * (T v)' (T diag(s^2) T')^+ (T v)

where v holds the per-group MCVs (or standardized means), s^2 the matching
estimated variances and T the hypothesis projection.  Under the null it is
asymptotically chi-square with rank(T) degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import chi2_sf
from .errors import BadDegrees, DegenerateVariance, DimensionMismatch
from .estimators import GroupEstimates
from .linalg import ContrastSpec, moore_penrose

TARGETS = ("mcv", "std_mean")

__all__ = ["TARGETS", "TestResult", "wald_statistic", "asymptotic_test"]


@dataclass(frozen=True)
class TestResult:
    """Outcome of one hypothesis test for one target parameter."""

    target: str  # "mcv" or "std_mean"
    statistic: float
    df: int
    p_asymptotic: float
    p_permutation: float | None = None
    permutations_used: int | None = None
    permutation_failures: int = 0
    estimates: tuple[GroupEstimates, ...] = field(default=(), compare=False)


def target_values(estimates: list[GroupEstimates] | tuple[GroupEstimates, ...], target: str):
    if target == "mcv":
        values = [e.mcv for e in estimates]
        variances = [e.var_mcv for e in estimates]
    elif target == "std_mean":
        values = [e.std_mean for e in estimates]
        variances = [e.var_std_mean for e in estimates]
    else:
        raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")
    return np.array(values), np.array(variances)


def wald_statistic(
    estimates: list[GroupEstimates] | tuple[GroupEstimates, ...],
    contrast: ContrastSpec,
    target: str,
    total_n: int,
) -> float:
    """Studentized quadratic form for the requested target parameter."""
    values, variances = target_values(estimates, target)
    t = contrast.projection
    if t.shape[1] != values.size:
        raise DimensionMismatch(
            f"contrast is for {t.shape[1]} groups, got {values.size} groups of estimates"
        )
    if np.any(variances <= 0.0):
        raise DegenerateVariance("all group variances must be positive")
    tv = t @ values
    middle = (t * variances) @ t.T  # T diag(variances) T'
    stat = float(total_n * tv @ moore_penrose(middle) @ tv)
    return max(stat, 0.0)


def asymptotic_test(statistic: float, df: int) -> float:
    """Upper-tail chi-square p-value of the Wald statistic."""
    if df == 0:
        raise BadDegrees("hypothesis is vacuous (rank 0 contrast)")
    return chi2_sf(statistic, df)
