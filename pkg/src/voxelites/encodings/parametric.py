"""Parametric encoding: a fixed number of axis-aligned rectangles.

Each rectangle is four integers (x, y, width, length).  Rectangles stamp +1
level onto the cells they cover, so overlaps stack up to the level cap.  A
rectangle with zero width or length contributes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..errors import ConfigError
from ..phenotype import GRID_COLS, GRID_ROWS, MAX_LEVEL
from .base import Encoding


@dataclass(frozen=True, eq=False)
class ParametricGenome:
    kind: ClassVar[str] = "parametric"
    rects: np.ndarray  # (n, 4) columns x, y, width, length

    def to_json_dict(self) -> dict:
        return {"rects": [[int(v) for v in row] for row in self.rects]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "ParametricGenome":
        return cls(rects=np.asarray(data["rects"], dtype=np.int64).reshape(-1, 4))


@dataclass(frozen=True)
class ParametricEncoding(Encoding):
    kind: ClassVar[str] = "parametric"
    n_rectangles: int = 8
    p_mut: float = 0.05
    sigma: float = 0.3
    rows: int = GRID_ROWS
    cols: int = GRID_COLS

    def __post_init__(self):
        if self.n_rectangles < 1:
            raise ConfigError("n_rectangles must be positive", "n_rectangles")
        if not 0.0 <= self.p_mut <= 1.0:
            raise ConfigError("p_mut must be in [0, 1]", "p_mut")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive", "sigma")

    @property
    def dimensionality(self) -> int:
        return 4 * self.n_rectangles

    def random(self, rng: np.random.Generator) -> ParametricGenome:
        n = self.n_rectangles
        x = rng.integers(0, self.cols, size=n)
        y = rng.integers(0, self.rows, size=n)
        # size is uniform over what still fits, so every placement is valid
        w = (rng.random(n) * (self.cols - x + 1)).astype(np.int64)
        l = (rng.random(n) * (self.rows - y + 1)).astype(np.int64)
        return ParametricGenome(np.stack([x, y, w, l], axis=1))

    def decode(self, genome: ParametricGenome) -> np.ndarray:
        grid = np.zeros((self.rows, self.cols), dtype=np.int64)
        for x, y, w, l in genome.rects:
            grid[y : y + l, x : x + w] += 1
        return np.minimum(grid, MAX_LEVEL)

    def mutate(self, genome: ParametricGenome, rng: np.random.Generator) -> ParametricGenome:
        """Each coordinate, with probability ``p_mut``, steps by an integer of
        magnitude ceil(|N(0, sigma)|); rectangles are then clamped back into the
        buildable area (position first, then size)."""
        flat = genome.rects.copy().ravel()
        hit = rng.random(flat.size) < self.p_mut
        n_hit = int(hit.sum())
        if n_hit:
            draw = rng.normal(0.0, self.sigma, size=n_hit)
            flat[hit] += (np.sign(draw) * np.ceil(np.abs(draw))).astype(np.int64)
        rects = flat.reshape(-1, 4)
        np.clip(rects[:, 0], 0, self.cols - 1, out=rects[:, 0])
        np.clip(rects[:, 1], 0, self.rows - 1, out=rects[:, 1])
        np.clip(rects[:, 2], 0, self.cols - rects[:, 0], out=rects[:, 2])
        np.clip(rects[:, 3], 0, self.rows - rects[:, 1], out=rects[:, 3])
        return ParametricGenome(rects)

    def validate(self, genome: ParametricGenome) -> None:
        r = genome.rects
        if r.shape != (self.n_rectangles, 4):
            raise ValueError(f"rects shape {r.shape} != ({self.n_rectangles}, 4)")
        if (r[:, 0] < 0).any() or (r[:, 0] >= self.cols).any():
            raise ValueError("rectangle x out of range")
        if (r[:, 1] < 0).any() or (r[:, 1] >= self.rows).any():
            raise ValueError("rectangle y out of range")
        if (r[:, 2] < 0).any() or (r[:, 0] + r[:, 2] > self.cols).any():
            raise ValueError("rectangle width overflows the grid")
        if (r[:, 3] < 0).any() or (r[:, 1] + r[:, 3] > self.rows).any():
            raise ValueError("rectangle length overflows the grid")
