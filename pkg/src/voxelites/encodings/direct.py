"""Direct encoding: one gene per grid cell."""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..errors import ConfigError
from ..phenotype import GRID_COLS, GRID_ROWS, MAX_LEVEL
from .base import Encoding


@dataclass(frozen=True, eq=False)
class DirectGenome:
    kind: ClassVar[str] = "direct"
    heights: np.ndarray  # (rows*cols,) levels 0..MAX_LEVEL

    def to_json_dict(self) -> dict:
        return {"heights": [int(v) for v in self.heights]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "DirectGenome":
        return cls(heights=np.asarray(data["heights"], dtype=np.int64))


@dataclass(frozen=True)
class DirectEncoding(Encoding):
    kind: ClassVar[str] = "direct"
    p_mut: float = 0.05
    rows: int = GRID_ROWS
    cols: int = GRID_COLS

    def __post_init__(self):
        if not 0.0 <= self.p_mut <= 1.0:
            raise ConfigError("p_mut must be in [0, 1]", "p_mut")
        if self.rows < 1 or self.cols < 1:
            raise ConfigError("grid must have at least one cell")

    @property
    def dimensionality(self) -> int:
        return self.rows * self.cols

    def random(self, rng: np.random.Generator) -> DirectGenome:
        return DirectGenome(rng.integers(0, MAX_LEVEL + 1, size=self.dimensionality))

    def decode(self, genome: DirectGenome) -> np.ndarray:
        return genome.heights.reshape(self.rows, self.cols).copy()

    def mutate(self, genome: DirectGenome, rng: np.random.Generator) -> DirectGenome:
        """Each gene steps by +-1 with probability ``p_mut``, clamped to the level range.

        A step pointing outside the range is clamped, so a mutation at a bound
        is a no-op half of the time.
        """
        heights = genome.heights.copy()
        chosen = rng.random(heights.size) < self.p_mut
        n_chosen = int(chosen.sum())
        if n_chosen:
            steps = rng.integers(0, 2, size=n_chosen) * 2 - 1
            heights[chosen] = np.clip(heights[chosen] + steps, 0, MAX_LEVEL)
        return DirectGenome(heights)

    def validate(self, genome: DirectGenome) -> None:
        if genome.heights.shape != (self.dimensionality,):
            raise ValueError(f"genome length {genome.heights.shape} != ({self.dimensionality},)")
        if genome.heights.min(initial=0) < 0 or genome.heights.max(initial=0) > MAX_LEVEL:
            raise ValueError("gene values must lie in 0..%d" % MAX_LEVEL)
