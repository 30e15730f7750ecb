"""CSV ingestion: rows with response columns and one or two factor columns.

Groups are the factor-level combinations.  With two factors the cells are
ordered first factor outer, second factor inner (the same flattening the
two-way contrasts use), with levels in first-appearance order unless an
explicit level order is supplied.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCell, NonNumericValue, ParseError
from .estimators import GroupSample

__all__ = ["IngestSpec", "CellInfo", "load_dataset"]


@dataclass(frozen=True)
class IngestSpec:
    """What to read from a delimited text file.

    ``value_columns`` are the response coordinates (d of them) and
    ``factor_columns`` the one or two grouping columns.  Columns are
    addressed by name when ``header`` is true, otherwise by 1-based
    position.  ``levels``, when given, fixes the level order per factor.
    """

    path: str
    value_columns: tuple[str, ...]
    factor_columns: tuple[str, ...]
    header: bool = True
    delimiter: str = ","
    levels: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self) -> None:
        if not self.value_columns:
            raise ParseError("at least one value column is required")
        if len(self.factor_columns) not in (1, 2):
            raise ParseError(
                f"expected 1 or 2 factor columns, got {len(self.factor_columns)}"
            )
        if self.levels is not None and len(self.levels) != len(self.factor_columns):
            raise ParseError("one level list per factor column is required")


@dataclass(frozen=True)
class CellInfo:
    """One design cell: flat index, display label, factor levels, size."""

    index: int
    label: str
    levels: tuple[str, ...]
    n: int


def _column_indices(spec: IngestSpec, first_row: list[str]) -> tuple[dict[str, int], int]:
    """Map requested column names to positions; returns (mapping, data_start_row)."""
    wanted = list(spec.value_columns) + list(spec.factor_columns)
    if spec.header:
        names = [name.strip() for name in first_row]
        mapping = {}
        for col in wanted:
            if col not in names:
                raise ParseError(f"column {col!r} not found in header {names}")
            mapping[col] = names.index(col)
        return mapping, 2
    mapping = {}
    for col in wanted:
        try:
            pos = int(col)
        except ValueError as exc:
            raise ParseError(
                f"without a header, columns are 1-based positions; got {col!r}"
            ) from exc
        if pos < 1:
            raise ParseError(f"column positions are 1-based; got {pos}")
        mapping[col] = pos - 1
    return mapping, 1


def _parse_value(raw: str, row_no: int, column: str) -> float:
    text = raw.strip()
    if not text:
        raise NonNumericValue(f"row {row_no}, column {column!r}: empty value")
    try:
        value = float(text)
    except ValueError as exc:
        raise NonNumericValue(
            f"row {row_no}, column {column!r}: {raw!r} is not a number"
        ) from exc
    if not math.isfinite(value):
        raise NonNumericValue(f"row {row_no}, column {column!r}: non-finite value {raw!r}")
    return value


def load_dataset(spec: IngestSpec) -> tuple[list[GroupSample], list[CellInfo]]:
    """Read the file and partition rows into design cells.

    Returns the groups in flat cell order plus the cell map.  Raises
    :class:`ParseError`/:class:`NonNumericValue` naming row and column, and
    :class:`EmptyCell` when a factor-level combination has no rows.
    """
    try:
        handle = open(spec.path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {spec.path}: {exc}") from exc

    rows_by_key: dict[tuple[str, ...], list[list[float]]] = {}
    seen_levels: list[list[str]] = [[] for _ in spec.factor_columns]
    with handle:
        reader = csv.reader(handle, delimiter=spec.delimiter)
        try:
            first_row = next(reader)
        except StopIteration:
            raise ParseError(f"{spec.path} is empty") from None
        mapping, start = _column_indices(spec, first_row)
        pending = [] if spec.header else [first_row]
        max_pos = max(mapping.values())
        row_no = start - 1
        for row in pending + list(reader):
            row_no += 1
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= max_pos:
                raise ParseError(
                    f"row {row_no}: expected at least {max_pos + 1} fields, got {len(row)}"
                )
            values = [
                _parse_value(row[mapping[col]], row_no, col) for col in spec.value_columns
            ]
            key = tuple(row[mapping[col]].strip() for col in spec.factor_columns)
            for level, seen in zip(key, seen_levels):
                if level not in seen:
                    seen.append(level)
            rows_by_key.setdefault(key, []).append(values)

    if not rows_by_key:
        raise ParseError(f"{spec.path} contains no data rows")

    if spec.levels is not None:
        level_order = [list(levels) for levels in spec.levels]
        for factor, (given, seen) in enumerate(zip(level_order, seen_levels)):
            unexpected = [lev for lev in seen if lev not in given]
            if unexpected:
                raise ParseError(
                    f"factor {spec.factor_columns[factor]!r}: observed levels {unexpected} "
                    f"not in the supplied level list {given}"
                )
    else:
        level_order = seen_levels

    if len(spec.factor_columns) == 1:
        keys = [(lev,) for lev in level_order[0]]
    else:
        keys = [(la, lb) for la in level_order[0] for lb in level_order[1]]

    groups: list[GroupSample] = []
    cells: list[CellInfo] = []
    for index, key in enumerate(keys):
        label = ":".join(
            f"{col}={lev}" for col, lev in zip(spec.factor_columns, key)
        )
        if key not in rows_by_key:
            raise EmptyCell(f"cell {label} has no observations")
        data = np.asarray(rows_by_key[key], dtype=float)
        groups.append(GroupSample(data, label=label))
        cells.append(CellInfo(index=index, label=label, levels=key, n=data.shape[0]))
    return groups, cells
