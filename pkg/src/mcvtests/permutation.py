"""Permutation counterparts of the Wald-type tests.

The pooled observations are randomly re-partitioned into groups of the
original sizes (drawing without replacement), and every estimator (means,
covariances, moment blocks, variances) is recomputed from scratch on each
permuted sample.  The permutation distribution of the studentized statistic
then calibrates the observed one.

Replications are independent: replication b draws from a stream keyed by
(seed, b), and results are aggregated by count, so p-values are bit-identical
regardless of worker count or chunking.  Replications whose recomputation
fails (singular permuted covariance, zero mean, degenerate variance) are
excluded and counted; more than 1% failures is a hard error because silently
dropping that many would bias the p-value.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterator, Sequence

import joblib
import numpy as np

from . import streams
from .errors import (
    DimensionMismatch,
    DomainError,
    EmptyDistribution,
    InvalidPlan,
    SingularCovariance,
    SizeMismatch,
    TooFewValidReplications,
    ZeroPooledMean,
)
from .estimators import (
    DEGENERATE_VARIANCE_TOL,
    ZERO_MEAN_RTOL,
    GroupSample,
    asymptotic_variances,
    pairwise_products,
)
from .linalg import ContrastSpec
from .wald import TARGETS, TestResult, asymptotic_test, wald_statistic

EXHAUSTIVE_CAP = 1_000_000
FAILURE_SHARE = 0.01
WORKERS_ENV = "MCVTESTS_WORKERS"

MODES = ("monte-carlo", "exhaustive")
P_VALUE_RULES = ("add-one", "raw-proportion")

__all__ = [
    "PooledStats",
    "PermutationPlan",
    "pooled_stats",
    "permute_sample",
    "permutation_quantile",
    "permutation_distribution",
    "permutation_test",
    "run_tests",
]


@dataclass(frozen=True)
class PooledStats:
    """Mean vector and size of the pooled sample."""

    mean: np.ndarray
    size: int


@dataclass(frozen=True)
class PermutationPlan:
    """How to generate the permutation distribution.

    ``mode`` is ``monte-carlo`` (``replications`` random permutations) or
    ``exhaustive`` (every ordered partition; only allowed while the
    multinomial count stays at or below 10^6).  ``p_value_rule`` picks the
    add-one estimate (1 + #{S_perm >= S_obs}) / (B + 1), valid at any finite
    B, or the raw proportion.
    """

    replications: int = 1000
    seed: int = 0
    mode: str = "monte-carlo"
    p_value_rule: str = "add-one"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise InvalidPlan(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.p_value_rule not in P_VALUE_RULES:
            raise InvalidPlan(
                f"unknown p-value rule {self.p_value_rule!r}; expected one of {P_VALUE_RULES}"
            )
        if self.mode == "monte-carlo" and self.replications < 1:
            raise InvalidPlan(f"replications must be >= 1, got {self.replications}")


def pooled_stats(groups: Sequence[GroupSample]) -> PooledStats:
    pooled = np.vstack([g.data for g in groups])
    return PooledStats(mean=pooled.mean(axis=0), size=pooled.shape[0])


def permute_sample(
    pooled: np.ndarray, sizes: Sequence[int], rng: np.random.Generator
) -> list[GroupSample]:
    """One uniformly random partition of the pooled rows into the given sizes."""
    pooled = np.atleast_2d(np.asarray(pooled, dtype=float))
    if any(m < 1 for m in sizes):
        raise SizeMismatch(f"every group must be nonempty, got sizes {tuple(sizes)}")
    if sum(sizes) != pooled.shape[0]:
        raise SizeMismatch(
            f"sizes sum to {sum(sizes)} but the pooled sample has {pooled.shape[0]} rows"
        )
    order = rng.permutation(pooled.shape[0])
    out, start = [], 0
    for i, m in enumerate(sizes):
        out.append(GroupSample(pooled[order[start : start + m]], label=f"perm-{i + 1}"))
        start += m
    return out


def permutation_quantile(perm_stats: Sequence[float], alpha: float) -> float:
    """Empirical (1 - alpha)-quantile, right-continuous inverse convention."""
    stats = np.asarray(perm_stats, dtype=float).ravel()
    if stats.size == 0:
        raise EmptyDistribution("no permutation statistics to take a quantile of")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    ordered = np.sort(stats)
    # tiny slop so float error in (1 - alpha) * m cannot push an exact
    # integer target up to the next order statistic
    target = (1.0 - alpha) * ordered.size - 1e-12 * ordered.size
    idx = math.ceil(target) - 1
    return float(ordered[min(max(idx, 0), ordered.size - 1)])


# ---------------------------------------------------------------------------
# batched recomputation of group estimates over many permutations at once


@lru_cache(maxsize=None)
def _jacobian_basis(d: int) -> np.ndarray:
    # basis[s] is the derivative of the centering Jacobian with respect to x_s,
    # so that centering_jacobian(x) == einsum('s,spd->pd', x, basis).
    basis = np.zeros((d, d * d, d))
    for a in range(d):
        for r in range(d):
            row = a * d + r
            if a == r:
                basis[a, row, a] = -2.0
            else:
                basis[r, row, a] = -1.0
                basis[a, row, r] = -1.0
    return basis


def _batch_group_stats(x_pool, p_pool, idx, weight, scale):
    """Estimates for one group across a batch of permutations.

    Returns (mcv, std_mean, var_mcv, var_std_mean, valid), each of shape (B,).
    Invalid rows (non-positive-definite covariance, zero mean, degenerate
    variance) carry zeros and ``valid=False``.
    """
    xb = x_pool[idx]
    pb = p_pool[idx]
    nb, m, d = xb.shape
    mean = xb.mean(axis=1)
    xc = xb - mean[:, None, :]
    cov = np.matmul(xc.transpose(0, 2, 1), xc) / m

    valid = np.linalg.norm(mean, axis=1) > ZERO_MEAN_RTOL * scale
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        for b in range(nb):
            if not valid[b]:
                continue
            try:
                np.linalg.cholesky(cov[b])
            except np.linalg.LinAlgError:
                valid[b] = False

    mcv = np.zeros(nb)
    std = np.zeros(nb)
    var_c = np.zeros(nb)
    var_b = np.zeros(nb)
    rows = np.flatnonzero(valid)
    if rows.size == 0:
        return mcv, std, var_c, var_b, valid

    meanv = mean[rows]
    covv = cov[rows]
    xcv = xc[rows]
    pbv = pb[rows]
    w = np.linalg.solve(covv, meanv[..., None])[..., 0]
    q = np.einsum("bi,bi->b", meanv, w)

    pbar = pbv.mean(axis=1)
    pcv = pbv - pbar[:, None, :]
    cross = np.matmul(pcv.transpose(0, 2, 1), xcv) / m
    prod = np.matmul(pcv.transpose(0, 2, 1), pcv) / m

    ww = (w[:, :, None] * w[:, None, :]).reshape(rows.size, d * d)
    jac = np.einsum("bs,spd->bpd", meanv, _jacobian_basis(d))
    gm = 2.0 * w - np.einsum("bp,bpd->bd", ww, jac)
    sandwich = (
        np.einsum("bi,bij,bj->b", gm, covv, gm)
        - 2.0 * np.einsum("bp,bpj,bj->b", ww, cross, gm)
        + np.einsum("bp,bpq,bq->b", ww, prod, ww)
    )
    vc = q**-3 * sandwich / (4.0 * weight)

    ok = vc > DEGENERATE_VARIANCE_TOL
    keep = rows[ok]
    valid[rows[~ok]] = False
    mcv[keep] = q[ok] ** -0.5
    std[keep] = q[ok] ** 0.5
    var_c[keep] = vc[ok]
    var_b[keep] = q[ok] ** 2 * vc[ok]
    return mcv, std, var_c, var_b, valid


def _batch_wald(values, variances, projection, total_n):
    """Wald statistics for a (B, k) batch of estimates, pseudoinverse by SVD."""
    tv = values @ projection.T
    middle = np.einsum("ij,bj,kj->bik", projection, variances, projection)
    u, s, vt = np.linalg.svd(middle)
    cutoff = middle.shape[-1] * 2.2e-16 * s[:, :1]
    inv = np.where(s > cutoff, 1.0, 0.0) / np.where(s > cutoff, s, 1.0)
    pinv = np.matmul(vt.transpose(0, 2, 1) * inv[:, None, :], u.transpose(0, 2, 1))
    stats = total_n * np.einsum("bi,bij,bj->b", tv, pinv, tv)
    return np.maximum(stats, 0.0)


def _chunk_stats(x_pool, p_pool, idx, sizes, weights, projection, targets, total_n, scale):
    """Per-target statistics plus validity for a chunk of permutation rows.

    Group index blocks are sorted first: the statistic only depends on which
    rows form a group, and a canonical row order makes equal partitions give
    bit-equal statistics, so ties against the observed value count exactly.
    """
    nb = idx.shape[0]
    k = len(sizes)
    d = x_pool.shape[1]
    mcv = np.empty((nb, k))
    std = np.empty((nb, k))
    var_c = np.empty((nb, k))
    var_b = np.empty((nb, k))
    valid = np.ones(nb, dtype=bool)
    start = 0
    for i, m in enumerate(sizes):
        gi = _batch_group_stats(
            x_pool, p_pool, np.sort(idx[:, start : start + m], axis=1), weights[i], scale
        )
        mcv[:, i], std[:, i], var_c[:, i], var_b[:, i] = gi[0], gi[1], gi[2], gi[3]
        valid &= gi[4]
        start += m
    out = {}
    for target in targets:
        values, variances = (mcv, var_c) if target == "mcv" else (std, var_b)
        stats = np.zeros(nb)
        if valid.any():
            stats[valid] = _batch_wald(values[valid], variances[valid], projection, total_n)
        out[target] = stats
    return out, valid


def _monte_carlo_chunk(
    x_pool, p_pool, sizes, weights, projection, targets, total_n, scale, seed, b_start, b_stop
):
    n = x_pool.shape[0]
    idx = np.empty((b_stop - b_start, n), dtype=np.intp)
    for j, b in enumerate(range(b_start, b_stop)):
        idx[j] = streams.indexed_stream(seed, b).permutation(n)
    return _chunk_stats(x_pool, p_pool, idx, sizes, weights, projection, targets, total_n, scale)


def _partition_count(sizes: Sequence[int]) -> int:
    remaining = sum(sizes)
    count = 1
    for m in sizes[:-1]:
        count *= math.comb(remaining, m)
        remaining -= m
    return count


def _ordered_partitions(indices: tuple[int, ...], sizes: Sequence[int]) -> Iterator[list[int]]:
    if len(sizes) == 1:
        yield list(indices)
        return
    for chosen in combinations(indices, sizes[0]):
        taken = set(chosen)
        rest = tuple(i for i in indices if i not in taken)
        for tail in _ordered_partitions(rest, sizes[1:]):
            yield list(chosen) + tail


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or "1")
    return max(1, int(workers))


def _chunk_rows(n: int, d: int) -> int:
    # keep per-chunk gathered product arrays around tens of megabytes
    return min(20_000, max(32, int(4e6 / (n * d * d + 1))))


class _PermutationPass:
    """One full evaluation of the permutation distribution for all targets."""

    def __init__(self, groups, contrast, targets, plan, workers=None):
        d = groups[0].d
        for g in groups[1:]:
            if g.d != d:
                raise DimensionMismatch("all groups must have the same dimension")
        for g in groups:
            if g.n < d + 2:
                raise SingularCovariance(
                    f"group {g.label!r}: permutation test needs at least d + 2 = {d + 2} "
                    f"observations per group, got {g.n}"
                )
        self.sizes = [g.n for g in groups]
        self.total_n = sum(self.sizes)
        self.weights = [m / self.total_n for m in self.sizes]
        self.x_pool = np.vstack([g.data for g in groups])
        self.scale = float(np.abs(self.x_pool).max())
        pooled = pooled_stats(groups)
        if self.scale == 0.0 or float(np.linalg.norm(pooled.mean)) <= ZERO_MEAN_RTOL * self.scale:
            raise ZeroPooledMean("pooled mean vector is numerically zero")
        self.pooled = pooled
        self.p_pool = pairwise_products(self.x_pool)
        self.projection = contrast.projection
        self.targets = tuple(targets)
        self.plan = plan
        self.workers = _resolve_workers(workers)

        if plan.mode == "exhaustive":
            count = _partition_count(self.sizes)
            if count > EXHAUSTIVE_CAP:
                raise InvalidPlan(
                    f"exhaustive enumeration would need {count} partitions (cap {EXHAUSTIVE_CAP})"
                )
            self.total_reps = count
        else:
            self.total_reps = plan.replications

        self.stats, self.valid = self._evaluate()
        self.n_valid = int(self.valid.sum())
        self.failures = self.total_reps - self.n_valid
        if self.failures > FAILURE_SHARE * self.total_reps:
            raise TooFewValidReplications(
                f"{self.failures} of {self.total_reps} permutation replications failed "
                f"(> {FAILURE_SHARE:.0%} tolerated); the data are too close to degenerate"
            )

    def _chunk_calls(self, chunk):
        if self.plan.mode == "exhaustive":
            block: list[list[int]] = []
            for row in _ordered_partitions(tuple(range(self.total_n)), self.sizes):
                block.append(row)
                if len(block) == chunk:
                    yield _chunk_stats, self._chunk_args(np.asarray(block, dtype=np.intp))
                    block = []
            if block:
                yield _chunk_stats, self._chunk_args(np.asarray(block, dtype=np.intp))
        else:
            for lo in range(0, self.total_reps, chunk):
                hi = min(lo + chunk, self.total_reps)
                yield _monte_carlo_chunk, (
                    self.x_pool,
                    self.p_pool,
                    self.sizes,
                    self.weights,
                    self.projection,
                    self.targets,
                    self.total_n,
                    self.scale,
                    self.plan.seed,
                    lo,
                    hi,
                )

    def _chunk_args(self, idx):
        return (
            self.x_pool,
            self.p_pool,
            idx,
            self.sizes,
            self.weights,
            self.projection,
            self.targets,
            self.total_n,
            self.scale,
        )

    def _evaluate(self):
        chunk = _chunk_rows(self.total_n, self.x_pool.shape[1])
        calls = self._chunk_calls(chunk)
        if self.workers > 1:
            results = joblib.Parallel(n_jobs=self.workers)(
                joblib.delayed(func)(*args) for func, args in calls
            )
        else:
            results = [func(*args) for func, args in calls]
        stats = {t: np.concatenate([r[0][t] for r in results]) for t in self.targets}
        valid = np.concatenate([r[1] for r in results])
        return stats, valid

    def observed(self) -> dict[str, float]:
        """Observed statistics evaluated through the same batched arithmetic,
        so that exhaustive enumeration ties the identity partition exactly."""
        identity = np.arange(self.total_n, dtype=np.intp)[None, :]
        stats, valid = _chunk_stats(
            self.x_pool,
            self.p_pool,
            identity,
            self.sizes,
            self.weights,
            self.projection,
            self.targets,
            self.total_n,
            self.scale,
        )
        if not bool(valid[0]):
            raise SingularCovariance("observed sample failed recomputation")
        return {t: float(stats[t][0]) for t in self.targets}

    def p_value(self, target: str, observed: float) -> float:
        stats = self.stats[target][self.valid]
        at_least = int(np.sum(stats >= observed))
        if self.plan.mode == "exhaustive" or self.plan.p_value_rule == "raw-proportion":
            return at_least / max(self.n_valid, 1)
        return (1 + at_least) / (self.n_valid + 1)

    def distribution(self, target: str) -> np.ndarray:
        return self.stats[target][self.valid].copy()


def run_tests(
    groups: Sequence[GroupSample],
    contrast: ContrastSpec,
    targets: Sequence[str] = ("mcv",),
    plan: PermutationPlan | None = None,
    workers: int | None = None,
) -> dict[str, TestResult]:
    """Asymptotic tests for every target, plus permutation p-values if a plan
    is given.  Returns one TestResult per target."""
    targets = tuple(dict.fromkeys(targets))
    for t in targets:
        if t not in TARGETS:
            raise ValueError(f"unknown target {t!r}; expected one of {TARGETS}")
    if contrast.k != len(groups):
        raise DimensionMismatch(
            f"contrast is for {contrast.k} groups, got {len(groups)} data groups"
        )
    total_n = sum(g.n for g in groups)
    estimates = tuple(asymptotic_variances(g, total_n) for g in groups)
    observed = {t: wald_statistic(estimates, contrast, t, total_n) for t in targets}
    df = contrast.rank
    p_asym = {t: asymptotic_test(observed[t], df) for t in targets}

    perm = None
    if plan is not None:
        perm = _PermutationPass(groups, contrast, targets, plan, workers=workers)
        comparison = perm.observed()

    results = {}
    for t in targets:
        if perm is None:
            results[t] = TestResult(
                target=t,
                statistic=observed[t],
                df=df,
                p_asymptotic=p_asym[t],
                estimates=estimates,
            )
        else:
            results[t] = TestResult(
                target=t,
                statistic=observed[t],
                df=df,
                p_asymptotic=p_asym[t],
                p_permutation=perm.p_value(t, comparison[t]),
                permutations_used=perm.n_valid,
                permutation_failures=perm.failures,
                estimates=estimates,
            )
    return results


def permutation_test(
    groups: Sequence[GroupSample],
    contrast: ContrastSpec,
    target: str,
    plan: PermutationPlan,
    workers: int | None = None,
) -> TestResult:
    """Permutation test for one target parameter."""
    return run_tests(groups, contrast, (target,), plan=plan, workers=workers)[target]


def permutation_distribution(
    groups: Sequence[GroupSample],
    contrast: ContrastSpec,
    target: str,
    plan: PermutationPlan,
    workers: int | None = None,
) -> np.ndarray:
    """The valid permutation statistics themselves (for quantiles/diagnostics)."""
    perm = _PermutationPass(groups, contrast, (target,), plan, workers=workers)
    return perm.distribution(target)
