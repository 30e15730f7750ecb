"""Dense linear-algebra primitives for the statistical layers.

Conventions fixed here and relied on everywhere else:

* ``vec`` stacks matrix columns (column 1 first), so that
  ``vec(A B C) == kronecker(C.T, A) @ vec(B)`` holds exactly.
* Pseudoinverse and rank use one shared SVD cutoff,
  ``max(rows, cols) * eps * s_max``, so ``rank(T)`` and ``(T S T')^+``
  can never disagree about effective rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotAContrast

_EPS = 2.2e-16

__all__ = [
    "ContrastSpec",
    "kronecker",
    "vec",
    "moore_penrose",
    "matrix_rank",
    "projection_matrix",
]


@dataclass(frozen=True)
class ContrastSpec:
    """A linear hypothesis: matrix ``hypothesis`` (r x k) with row sums zero,
    its symmetric idempotent projection (k x k) and the common rank."""

    hypothesis: np.ndarray
    projection: np.ndarray
    rank: int

    @property
    def k(self) -> int:
        return self.projection.shape[0]


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with block order ``[a_11 b, a_12 b, ...]``."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization of a matrix."""
    return np.asarray(a, dtype=float).T.reshape(-1)


def _svd_cutoff(s: np.ndarray, shape: tuple[int, int]) -> float:
    if s.size == 0:
        return 0.0
    return max(shape) * _EPS * float(s[0])


def pinv_from_singular(u: np.ndarray, s: np.ndarray, vt: np.ndarray, cutoff: float) -> np.ndarray:
    """Assemble a pseudoinverse from an SVD, zeroing singular values <= cutoff."""
    inv = np.where(s > cutoff, 1.0, 0.0) / np.where(s > cutoff, s, 1.0)
    return (vt.T * inv) @ u.T


def moore_penrose(a: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with the shared rank cutoff."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return a.T.copy()
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return pinv_from_singular(u, s, vt, _svd_cutoff(s, a.shape))


def matrix_rank(a: np.ndarray) -> int:
    """Rank determined by the same SVD cutoff as :func:`moore_penrose`."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > _svd_cutoff(s, a.shape)))


def projection_matrix(h: np.ndarray, atol: float = 1e-10) -> ContrastSpec:
    """Build the projection ``T = H' (H H')^+ H`` describing the same null as H.

    ``h`` must be a contrast matrix (rows summing to zero within ``atol``).
    T is computed from an orthonormal basis of the row space of H, which is
    the same matrix in exact arithmetic but keeps T symmetric and idempotent
    to machine precision.  Raises :class:`NotAContrast` otherwise.
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    if not np.all(np.isfinite(h)):
        raise NotAContrast("hypothesis matrix contains non-finite entries")
    row_sums = h.sum(axis=1)
    if np.max(np.abs(row_sums), initial=0.0) > atol:
        raise NotAContrast(
            f"rows must sum to zero (max |row sum| = {np.max(np.abs(row_sums)):.3g})"
        )
    u, s, vt = np.linalg.svd(h, full_matrices=False)
    rank = int(np.sum(s > _svd_cutoff(s, h.shape)))
    basis = vt[:rank]  # orthonormal rows spanning the row space of h
    projection = basis.T @ basis
    return ContrastSpec(hypothesis=h, projection=projection, rank=rank)
