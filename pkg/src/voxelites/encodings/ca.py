"""Cellular-automaton encoding: a seed cell grown by a learned convolution mask.

The state grid starts at zero except for a 1.0 at the seed cell. Each time step
replaces every cell with the mask-weighted sum of its n x n neighborhood (zero
padding beyond the grid edge) and clamps the state to [0, 3] so the linear map
cannot diverge. After ``steps`` iterations the state is rounded to the nearest
level, ties rounding up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import ndimage

from ..errors import ConfigError
from ..phenotype import GRID_COLS, GRID_ROWS, MAX_LEVEL
from .base import Encoding


@dataclass(frozen=True, eq=False)
class CaGenome:
    kind: ClassVar[str] = "ca"
    seed_row: int
    seed_col: int
    mask: np.ndarray  # (n, n) float weights

    def to_json_dict(self) -> dict:
        return {
            "seed_row": int(self.seed_row),
            "seed_col": int(self.seed_col),
            "mask": [[float(v) for v in row] for row in self.mask],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CaGenome":
        return cls(
            seed_row=int(data["seed_row"]),
            seed_col=int(data["seed_col"]),
            mask=np.asarray(data["mask"], dtype=np.float64),
        )


@dataclass(frozen=True)
class CaEncoding(Encoding):
    kind: ClassVar[str] = "ca"
    mask_size: int = 3
    steps: int = 10
    p_mut: float = 0.05
    sigma: float = 0.3
    rows: int = GRID_ROWS
    cols: int = GRID_COLS

    def __post_init__(self):
        if self.mask_size < 3 or self.mask_size % 2 == 0:
            raise ConfigError("mask_size must be an odd integer >= 3", "mask_size")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative", "steps")
        if not 0.0 <= self.p_mut <= 1.0:
            raise ConfigError("p_mut must be in [0, 1]", "p_mut")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive", "sigma")

    @property
    def dimensionality(self) -> int:
        return self.mask_size**2 + 2

    def random(self, rng: np.random.Generator) -> CaGenome:
        seed_row = int(rng.integers(0, self.rows))
        seed_col = int(rng.integers(0, self.cols))
        mask = rng.normal(size=(self.mask_size, self.mask_size))
        return CaGenome(seed_row, seed_col, mask)

    def decode(self, genome: CaGenome) -> np.ndarray:
        state = np.zeros((self.rows, self.cols))
        state[genome.seed_row, genome.seed_col] = 1.0
        for _ in range(self.steps):
            state = ndimage.correlate(state, genome.mask, mode="constant", cval=0.0)
            np.clip(state, 0.0, float(MAX_LEVEL), out=state)
        return np.floor(state + 0.5).astype(np.int64)

    def mutate(self, genome: CaGenome, rng: np.random.Generator) -> CaGenome:
        """Seed row and column each shift by +-1 with probability ``p_mut``
        (clamped in bounds); each mask weight gains N(0, sigma) with the same
        probability."""
        seed_row, seed_col = genome.seed_row, genome.seed_col
        if rng.random() < self.p_mut:
            seed_row = int(np.clip(seed_row + (int(rng.integers(0, 2)) * 2 - 1), 0, self.rows - 1))
        if rng.random() < self.p_mut:
            seed_col = int(np.clip(seed_col + (int(rng.integers(0, 2)) * 2 - 1), 0, self.cols - 1))
        mask = genome.mask.copy()
        hit = rng.random(mask.shape) < self.p_mut
        n_hit = int(hit.sum())
        if n_hit:
            mask[hit] += rng.normal(0.0, self.sigma, size=n_hit)
        return CaGenome(seed_row, seed_col, mask)

    def validate(self, genome: CaGenome) -> None:
        if not 0 <= genome.seed_row < self.rows:
            raise ValueError("seed row outside the grid")
        if not 0 <= genome.seed_col < self.cols:
            raise ValueError("seed column outside the grid")
        if genome.mask.shape != (self.mask_size, self.mask_size):
            raise ValueError(f"mask shape {genome.mask.shape} != ({self.mask_size}, {self.mask_size})")
        if not np.isfinite(genome.mask).all():
            raise ValueError("mask weights must be finite")
