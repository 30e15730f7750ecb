"""Hypothesis matrices for one-way and two-way factorial layouts.

Two-way cells are always flattened with the first factor outer and the
second factor inner: cell (i_A, i_B) maps to flat index
(i_A - 1) * b + i_B.  Data ingestion uses the same order, and the CLI
echoes the cell-to-index map so a mismatch cannot go unnoticed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadDesign, DimensionMismatch
from .linalg import ContrastSpec, kronecker, projection_matrix

__all__ = [
    "DesignSpec",
    "centering",
    "one_way_contrast",
    "two_way_contrast",
    "validate_contrast",
    "build_contrast",
]

TWO_WAY_EFFECTS = ("main-A", "main-B", "interaction")


@dataclass(frozen=True)
class DesignSpec:
    """Factorial layout plus the effect to test.

    A one-way layout (``k`` groups) pairs only with effect ``group``;
    a two-way layout (``a`` x ``b`` cells) pairs with ``main-A``,
    ``main-B`` or ``interaction``.
    """

    layout: str
    effect: str
    k: int | None = None
    a: int | None = None
    b: int | None = None

    def __post_init__(self) -> None:
        if self.layout == "one-way":
            if self.effect != "group":
                raise BadDesign(f"one-way layout tests effect 'group', not {self.effect!r}")
            if self.k is None or self.k < 2:
                raise BadDesign(f"one-way layout needs k >= 2 groups, got {self.k}")
        elif self.layout == "two-way":
            if self.effect not in TWO_WAY_EFFECTS:
                raise BadDesign(
                    f"two-way layout tests one of {TWO_WAY_EFFECTS}, not {self.effect!r}"
                )
            if self.a is None or self.b is None or self.a < 2 or self.b < 2:
                raise BadDesign(f"two-way layout needs a, b >= 2, got a={self.a}, b={self.b}")
        else:
            raise BadDesign(f"unknown layout {self.layout!r}")

    @property
    def cells(self) -> int:
        return self.k if self.layout == "one-way" else self.a * self.b


def centering(k: int) -> np.ndarray:
    """The k x k centering matrix I - J/k (rows sum to zero)."""
    return np.eye(k) - np.full((k, k), 1.0 / k)


def one_way_contrast(k: int) -> ContrastSpec:
    """All-groups-equal contrast: H = I - J/k, rank k - 1."""
    if k < 2:
        raise BadDesign(f"need k >= 2 groups, got {k}")
    return projection_matrix(centering(k))


def two_way_contrast(a: int, b: int, effect: str) -> ContrastSpec:
    """Main-effect or interaction contrast for an a x b layout."""
    if a < 2 or b < 2:
        raise BadDesign(f"need a, b >= 2, got a={a}, b={b}")
    if effect == "main-A":
        h = kronecker(centering(a), np.full((1, b), 1.0 / b))
    elif effect == "main-B":
        h = kronecker(np.full((1, a), 1.0 / a), centering(b))
    elif effect == "interaction":
        h = kronecker(centering(a), centering(b))
    else:
        raise BadDesign(f"unknown two-way effect {effect!r}; expected one of {TWO_WAY_EFFECTS}")
    return projection_matrix(h)


def validate_contrast(h: np.ndarray, k: int) -> ContrastSpec:
    """Accept a user-supplied hypothesis matrix for k groups."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    if h.shape[1] != k:
        raise DimensionMismatch(f"hypothesis matrix has {h.shape[1]} columns, design has {k}")
    return projection_matrix(h)


def build_contrast(design: DesignSpec) -> ContrastSpec:
    """ContrastSpec for a DesignSpec."""
    if design.layout == "one-way":
        return one_way_contrast(design.k)
    return two_way_contrast(design.a, design.b, design.effect)
