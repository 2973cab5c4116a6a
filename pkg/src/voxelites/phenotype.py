"""Height-grid phenotype: surrogate fitness, niche features, and export helpers.

A phenotype is an integer grid of building height levels. Each cell holds a
level in 0..3, where level h stands for a mass of 3*h meters. The default
site is 11 rows by 14 columns (154 cells), but every function here works on
any rectangular grid so reduced variants can be tested exhaustively.
"""

from __future__ import annotations

import json
from typing import IO, Iterable, NamedTuple

import numpy as np
from scipy import ndimage

GRID_ROWS = 11
GRID_COLS = 14
N_CELLS = GRID_ROWS * GRID_COLS
MAX_LEVEL = 3
METERS_PER_LEVEL = 3


class Features(NamedTuple):
    """Archive niche coordinates of a phenotype."""

    built_area: int
    building_count: int


def validate_grid(grid: np.ndarray, rows: int | None = None, cols: int | None = None) -> None:
    """Raise ValueError unless ``grid`` is a valid height-level grid."""
    arr = np.asarray(grid)
    if arr.ndim != 2:
        raise ValueError(f"grid must be 2-dimensional, got shape {arr.shape}")
    if rows is not None and arr.shape != (rows, cols):
        raise ValueError(f"grid shape {arr.shape} != expected ({rows}, {cols})")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"grid dtype must be integer, got {arr.dtype}")
    if arr.min(initial=0) < 0 or arr.max(initial=0) > MAX_LEVEL:
        raise ValueError("grid values must lie in 0..%d" % MAX_LEVEL)


def fitness(grid: np.ndarray, inflow_axis: int = 0) -> float:
    """Quality of a massing design under a cold-air inflow surrogate.

    Air travels parallel to ``inflow_axis`` (0: along the row axis, the
    default 11-cell direction). The silhouette it meets is, for each lateral
    position, the maximum height level along the travel direction. Fitness is
    one minus the silhouette area over its maximum, so an empty site scores
    1.0 and a fully massed site 0.0. Higher is better.
    """
    if inflow_axis not in (0, 1):
        raise ValueError(f"inflow_axis must be 0 or 1, got {inflow_axis}")
    lines = grid.shape[1 - inflow_axis]
    frontal = int(grid.max(axis=inflow_axis).sum())
    return 1.0 - frontal / (lines * MAX_LEVEL)


def features(grid: np.ndarray) -> Features:
    """Built area (cells with mass) and building count (4-connected components)."""
    built = grid > 0
    area = int(built.sum())
    if area == 0:
        return Features(0, 0)
    _, count = ndimage.label(built)
    return Features(area, int(count))


def flatten(grid: np.ndarray) -> np.ndarray:
    """Row-major copy of the grid as a 1-D level vector."""
    return np.asarray(grid).ravel().copy()


def unflatten(vector: np.ndarray, rows: int = GRID_ROWS, cols: int = GRID_COLS) -> np.ndarray:
    vec = np.asarray(vector)
    if vec.size != rows * cols:
        raise ValueError(f"vector length {vec.size} != {rows}*{cols}")
    return vec.reshape(rows, cols).copy()


def grid_to_json(grid: np.ndarray) -> list[list[int]]:
    return [[int(v) for v in row] for row in np.asarray(grid)]


def grid_from_json(data: list[list[int]]) -> np.ndarray:
    grid = np.asarray(data, dtype=np.int64)
    validate_grid(grid)
    return grid


def write_grids_csv(grids: Iterable[np.ndarray], stream: IO[str]) -> None:
    """One phenotype per line, row-major integer fields. No header."""
    for grid in grids:
        stream.write(",".join(str(int(v)) for v in flatten(grid)))
        stream.write("\n")


def write_grid_json(grid: np.ndarray, stream: IO[str]) -> None:
    json.dump(grid_to_json(grid), stream)
    stream.write("\n")
