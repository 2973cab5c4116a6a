"""Dictionary encoding: the grid is tiled into blocks, each gene indexes a block pattern.

The grid is partitioned row-major into ``block_rows x block_cols`` tiles.  When
the grid does not divide evenly the trailing band in either direction shrinks,
so an 11x14 grid under 2x2 blocks ends with a band of 1x2 tiles.  For each tile
shape the dictionary enumerates every height combination in lexicographic
order (row-major cells, most significant first), which makes genome values
stable across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar

import numpy as np

from ..errors import ConfigError
from ..phenotype import GRID_COLS, GRID_ROWS, MAX_LEVEL
from .base import Encoding

N_LEVELS = MAX_LEVEL + 1


@dataclass(frozen=True, eq=False)
class DictionaryGenome:
    kind: ClassVar[str] = "dictionary"
    indices: np.ndarray  # (n_groups,) dictionary index per tile

    def to_json_dict(self) -> dict:
        return {"indices": [int(v) for v in self.indices]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "DictionaryGenome":
        return cls(indices=np.asarray(data["indices"], dtype=np.int64))


class _Layout:
    """Precomputed partition and per-shape block dictionaries."""

    def __init__(self, rows: int, cols: int, block_rows: int, block_cols: int):
        slots = []
        r = 0
        while r < rows:
            h = min(block_rows, rows - r)
            c = 0
            while c < cols:
                w = min(block_cols, cols - c)
                slots.append((r, c, h, w))
                c += w
            r += h
        self.slots = slots
        self.n_groups = len(slots)
        self.shapes = sorted({(h, w) for _, _, h, w in slots})
        # blocks[(h, w)] lists every h*w height pattern, row-major flat,
        # ordered as base-4 numerals with the first cell most significant.
        self.blocks = {}
        for h, w in self.shapes:
            k = h * w
            idx = np.arange(N_LEVELS**k)
            digits = np.empty((len(idx), k), dtype=np.int64)
            for i in range(k):
                digits[:, k - 1 - i] = (idx // (N_LEVELS**i)) % N_LEVELS
            self.blocks[(h, w)] = digits
        flat = np.arange(rows * cols).reshape(rows, cols)
        self.by_shape = []
        for shape in self.shapes:
            h, w = shape
            gids = [i for i, (_, _, hh, ww) in enumerate(slots) if (hh, ww) == shape]
            cells = np.stack(
                [flat[r0 : r0 + h, c0 : c0 + w].ravel() for r0, c0, _, _ in (slots[i] for i in gids)]
            )
            self.by_shape.append((shape, np.asarray(gids), cells))
        self.sizes = np.array([N_LEVELS ** (h * w) for _, _, h, w in slots])
        # power-of-4 weights per slot for encoding a grid back into indices
        self.weights = [N_LEVELS ** np.arange(h * w - 1, -1, -1) for _, _, h, w in slots]


@dataclass(frozen=True)
class DictionaryEncoding(Encoding):
    kind: ClassVar[str] = "dictionary"
    p_mut: float = 0.05
    block_rows: int = 2
    block_cols: int = 2
    max_step: int = 5
    rows: int = GRID_ROWS
    cols: int = GRID_COLS

    def __post_init__(self):
        if not 0.0 <= self.p_mut <= 1.0:
            raise ConfigError("p_mut must be in [0, 1]", "p_mut")
        if self.block_rows < 1 or self.block_cols < 1:
            raise ConfigError("block size must be at least 1x1", "block_rows")
        if self.block_rows > self.rows or self.block_cols > self.cols:
            raise ConfigError("block size cannot exceed the grid", "block_rows")
        if self.max_step < 1:
            raise ConfigError("max_step must be at least 1", "max_step")

    @cached_property
    def _layout(self) -> _Layout:
        return _Layout(self.rows, self.cols, self.block_rows, self.block_cols)

    @property
    def partition(self) -> list[tuple[int, int, int, int]]:
        """Row-major tile list as (row, col, height, width) tuples."""
        return list(self._layout.slots)

    @property
    def dimensionality(self) -> int:
        return self._layout.n_groups

    def random(self, rng: np.random.Generator) -> DictionaryGenome:
        lay = self._layout
        idx = (rng.random(lay.n_groups) * lay.sizes).astype(np.int64)
        return DictionaryGenome(idx)

    def decode(self, genome: DictionaryGenome) -> np.ndarray:
        lay = self._layout
        out = np.empty(self.rows * self.cols, dtype=np.int64)
        for shape, gids, cells in lay.by_shape:
            out[cells] = lay.blocks[shape][genome.indices[gids]]
        return out.reshape(self.rows, self.cols)

    def encode(self, grid: np.ndarray) -> DictionaryGenome:
        """Build the genome whose per-tile dictionary entries reproduce ``grid``."""
        lay = self._layout
        indices = np.empty(lay.n_groups, dtype=np.int64)
        for i, (r0, c0, h, w) in enumerate(lay.slots):
            block = np.asarray(grid)[r0 : r0 + h, c0 : c0 + w].ravel()
            indices[i] = int(block @ lay.weights[i])
        return DictionaryGenome(indices)

    def mutate(self, genome: DictionaryGenome, rng: np.random.Generator) -> DictionaryGenome:
        """Each gene, with probability ``p_mut``, jumps to a uniformly chosen block
        whose summed per-cell height difference from the current block is between
        1 and ``max_step``."""
        lay = self._layout
        indices = genome.indices.copy()
        hit = rng.random(lay.n_groups) < self.p_mut
        for i in np.flatnonzero(hit):
            _, _, h, w = lay.slots[i]
            blocks = lay.blocks[(h, w)]
            dist = np.abs(blocks - blocks[indices[i]]).sum(axis=1)
            cand = np.flatnonzero((dist >= 1) & (dist <= self.max_step))
            indices[i] = int(cand[rng.integers(len(cand))])
        return DictionaryGenome(indices)

    def validate(self, genome: DictionaryGenome) -> None:
        lay = self._layout
        if genome.indices.shape != (lay.n_groups,):
            raise ValueError(f"genome length {genome.indices.shape} != ({lay.n_groups},)")
        if (genome.indices < 0).any() or (genome.indices >= lay.sizes).any():
            raise ValueError("dictionary index out of range for its tile")
