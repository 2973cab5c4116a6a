"""Uniform interface implemented by every genome encoding.

An encoding bundles three things: drawing a random genome, decoding a genome
into a height grid, and mutating a genome. Encodings are immutable value
objects holding their hyperparameters; all randomness comes from the caller's
generator, so the same generator state always yields the same result.
"""

from __future__ import annotations

import abc
import dataclasses
from typing import Any, ClassVar

import numpy as np

from ..phenotype import GRID_COLS, GRID_ROWS


class Encoding(abc.ABC):
    """Random initialization, genome decoding and mutation for one genome layout."""

    kind: ClassVar[str]
    rows: int
    cols: int

    @property
    @abc.abstractmethod
    def dimensionality(self) -> int:
        """Number of degrees of freedom in the genome."""

    @abc.abstractmethod
    def random(self, rng: np.random.Generator) -> Any:
        """Draw a genome uniformly over the encoding's bounded loci."""

    @abc.abstractmethod
    def decode(self, genome: Any) -> np.ndarray:
        """Map a genome to a height grid. Pure and deterministic."""

    @abc.abstractmethod
    def mutate(self, genome: Any, rng: np.random.Generator) -> Any:
        """Return a perturbed copy; the input genome is left untouched."""

    @abc.abstractmethod
    def validate(self, genome: Any) -> None:
        """Raise ValueError if the genome violates the encoding's invariants."""

    def to_config(self) -> dict:
        """Serializable hyperparameter dict, keyed by ``kind``."""
        out = {"kind": self.kind}
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            out[field.name] = list(value) if isinstance(value, tuple) else value
        return out


def default_grid_shape() -> tuple[int, int]:
    return GRID_ROWS, GRID_COLS
