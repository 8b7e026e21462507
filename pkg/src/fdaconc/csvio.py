"""CSV forms for curves, operators and plot data.

Curves CSV: one curve per row, d numeric columns.  With ``fmt="grid"`` the
first row holds the grid points and quadrature weights come from the
trapezoid rule; otherwise the grid is uniform on [0, 1] with weights 1/d.
Operator CSV: a d x d matrix of kernel values.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .fda_stats import FunctionalSample
from .operator_core import CovOperator, Grid

PathLike = Union[str, Path]


class CurveFormatError(ValueError):
    """Malformed curve or operator CSV."""


class EmptyFileError(CurveFormatError):
    pass


class RaggedRowError(CurveFormatError):
    def __init__(self, path, row: int, got: int, expected: int):
        super().__init__(f"{path}: row {row} has {got} columns, expected {expected}")
        self.row = row


class NonNumericCellError(CurveFormatError):
    def __init__(self, path, row: int, col: int, cell: str):
        super().__init__(f"{path}: row {row}, column {col}: {cell!r} is not a number")
        self.row = row
        self.col = col


def read_numeric_rows(path: PathLike) -> np.ndarray:
    """Rectangular float matrix from a CSV; rows are numbered from 1 in errors."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or all(not c.strip() for c in row):
                continue
            rows.append(row)
    if not rows:
        raise EmptyFileError(f"{path}: no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise RaggedRowError(path, i, len(row), width)
        for j, cell in enumerate(row, start=1):
            try:
                out[i - 1, j - 1] = float(cell)
            except ValueError:
                raise NonNumericCellError(path, i, j, cell) from None
    if not np.all(np.isfinite(out)):
        r, c = np.argwhere(~np.isfinite(out))[0]
        raise NonNumericCellError(path, int(r) + 1, int(c) + 1, str(out[r, c]))
    return out


def ingest_curves(path: PathLike, fmt: str = "rows", label=None,
                  grid: Optional[Grid] = None) -> FunctionalSample:
    """Read a curves CSV.  ``fmt`` is 'rows' (no header) or 'grid' (header of grid points)."""
    data = read_numeric_rows(path)
    if fmt == "grid":
        if data.shape[0] < 2:
            raise EmptyFileError(f"{path}: grid header but no curves")
        try:
            file_grid = Grid.from_points(data[0])
        except ValueError as exc:
            raise CurveFormatError(f"{path}: bad grid header: {exc}") from None
        if grid is not None and grid != file_grid:
            raise CurveFormatError(f"{path}: grid header differs from the expected grid")
        grid, data = file_grid, data[1:]
    elif fmt == "rows":
        if grid is None:
            if data.shape[1] < 2:
                raise CurveFormatError(f"{path}: curves need at least 2 columns")
            grid = Grid.uniform(data.shape[1])
    else:
        raise ValueError(f"unknown curve format {fmt!r}")
    if data.shape[1] != grid.size:
        raise CurveFormatError(f"{path}: {data.shape[1]} columns for a grid of size {grid.size}")
    return FunctionalSample(grid, data, label)


def write_curves(path: PathLike, sample: FunctionalSample, with_grid: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if with_grid:
            w.writerow([repr(float(t)) for t in sample.grid.points])
        for row in sample.values:
            w.writerow([repr(float(v)) for v in row])


def ingest_operator(path: PathLike, grid: Optional[Grid] = None) -> CovOperator:
    m = read_numeric_rows(path)
    if m.shape[0] != m.shape[1]:
        raise CurveFormatError(f"{path}: operator matrix is {m.shape[0]}x{m.shape[1]}, not square")
    grid = grid or Grid.uniform(m.shape[0])
    try:
        return CovOperator(grid, m)
    except ValueError as exc:
        raise CurveFormatError(f"{path}: {exc}") from None


def write_operator(path: PathLike, op: CovOperator) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in op.kernel:
            w.writerow([repr(float(v)) for v in row])


def ingest_grouped_curves(path: PathLike, fmt: str = "rows") -> tuple[list, list[FunctionalSample]]:
    """Curves CSV whose first column is a group id; returns (group ids, samples)."""
    data = read_numeric_rows(path)
    header = None
    if fmt == "grid":
        header, data = data[0, 1:], data[1:]
    if data.shape[1] < 3:
        raise CurveFormatError(f"{path}: need a group column and at least 2 value columns")
    grid = Grid.from_points(header) if header is not None else Grid.uniform(data.shape[1] - 1)
    ids = data[:, 0]
    if not np.all(ids == np.round(ids)):
        raise CurveFormatError(f"{path}: group ids must be integers")
    order = list(dict.fromkeys(int(g) for g in ids))
    groups = [FunctionalSample(grid, data[ids == g, 1:]) for g in order]
    return order, groups
