"""Compositional pattern-producing network over grid coordinates.

The network topology is fixed by the hyperparameters: inputs are
(x_norm, y_norm, 1) with coordinates scaled to [-1, 1], one or two fully
connected hidden layers of ``hidden_neurons`` units, and a single tanh output
neuron. Evolution touches only the flat weight vector and the per-hidden-neuron
activation selectors. The output in [-1, 1] is cut at -0.5, 0 and 0.5 into the
four height levels, so an output of exactly 0 lands in level 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, ClassVar

import numpy as np
from scipy.special import expit

from ..errors import ConfigError
from ..phenotype import GRID_COLS, GRID_ROWS
from .base import Encoding


def _gaussian(z: np.ndarray) -> np.ndarray:
    return np.exp(-z * z)


def _zero(z: np.ndarray) -> np.ndarray:
    return np.zeros_like(z)


def _one(z: np.ndarray) -> np.ndarray:
    return np.ones_like(z)


def _step(z: np.ndarray) -> np.ndarray:
    return (z > 0).astype(float)


ACTIVATIONS: tuple[Callable[[np.ndarray], np.ndarray], ...] = (
    _gaussian,
    np.tanh,
    expit,
    np.sin,
    np.cos,
    _zero,
    _one,
    _step,
)
ACTIVATION_NAMES = ("gaussian", "tanh", "sigmoid", "sine", "cosine", "zero", "one", "step")
N_ACTIVATIONS = len(ACTIVATIONS)


@dataclass(frozen=True, eq=False)
class CppnGenome:
    kind: ClassVar[str] = "cppn"
    weights: np.ndarray  # flat float vector, layer by layer
    activations: np.ndarray  # (n_hidden,) selectors into ACTIVATIONS

    def to_json_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "activations": [int(v) for v in self.activations],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CppnGenome":
        return cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            activations=np.asarray(data["activations"], dtype=np.int64),
        )


@dataclass(frozen=True)
class CppnEncoding(Encoding):
    kind: ClassVar[str] = "cppn"
    hidden_layers: int = 1
    hidden_neurons: int = 16
    p_mut: float = 0.05
    sigma: float = 0.3
    thresholds: tuple[float, float, float] = (-0.5, 0.0, 0.5)
    rows: int = GRID_ROWS
    cols: int = GRID_COLS

    def __post_init__(self):
        if self.hidden_layers not in (1, 2):
            raise ConfigError("hidden_layers must be 1 or 2", "hidden_layers")
        if self.hidden_neurons < 1:
            raise ConfigError("hidden_neurons must be positive", "hidden_neurons")
        if not 0.0 <= self.p_mut <= 1.0:
            raise ConfigError("p_mut must be in [0, 1]", "p_mut")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive", "sigma")
        if list(self.thresholds) != sorted(self.thresholds):
            raise ConfigError("thresholds must be non-decreasing", "thresholds")

    @cached_property
    def _weight_shapes(self) -> list[tuple[int, int]]:
        n = self.hidden_neurons
        return [(3, n)] + [(n, n)] * (self.hidden_layers - 1) + [(n, 1)]

    @cached_property
    def _inputs(self) -> np.ndarray:
        ys, xs = np.mgrid[0 : self.rows, 0 : self.cols]
        xn = 2.0 * xs / (self.cols - 1) - 1.0 if self.cols > 1 else np.zeros_like(xs, dtype=float)
        yn = 2.0 * ys / (self.rows - 1) - 1.0 if self.rows > 1 else np.zeros_like(ys, dtype=float)
        return np.stack([xn.ravel(), yn.ravel(), np.ones(self.rows * self.cols)], axis=1)

    @property
    def n_weights(self) -> int:
        return sum(a * b for a, b in self._weight_shapes)

    @property
    def n_hidden(self) -> int:
        return self.hidden_layers * self.hidden_neurons

    @property
    def dimensionality(self) -> int:
        return self.n_weights + self.n_hidden

    def random(self, rng: np.random.Generator) -> CppnGenome:
        return CppnGenome(
            weights=rng.normal(size=self.n_weights),
            activations=rng.integers(0, N_ACTIVATIONS, size=self.n_hidden),
        )

    def _matrices(self, weights: np.ndarray) -> list[np.ndarray]:
        mats = []
        offset = 0
        for a, b in self._weight_shapes:
            mats.append(weights[offset : offset + a * b].reshape(a, b))
            offset += a * b
        return mats

    def decode(self, genome: CppnGenome) -> np.ndarray:
        mats = self._matrices(genome.weights)
        h = self._inputs
        n = self.hidden_neurons
        for layer in range(self.hidden_layers):
            z = h @ mats[layer]
            out = np.empty_like(z)
            selectors = genome.activations[layer * n : (layer + 1) * n]
            for k in range(N_ACTIVATIONS):
                which = selectors == k
                if which.any():
                    out[:, which] = ACTIVATIONS[k](z[:, which])
            h = out
        y = np.tanh(h @ mats[-1]).ravel()
        levels = np.digitize(y, np.asarray(self.thresholds))
        return levels.reshape(self.rows, self.cols)

    def mutate(self, genome: CppnGenome, rng: np.random.Generator) -> CppnGenome:
        """Weights gain N(0, sigma) with probability ``p_mut`` each; activation
        selectors are re-drawn uniformly with the same probability. Topology is
        untouched."""
        weights = genome.weights.copy()
        hit = rng.random(weights.size) < self.p_mut
        n_hit = int(hit.sum())
        if n_hit:
            weights[hit] += rng.normal(0.0, self.sigma, size=n_hit)
        activations = genome.activations.copy()
        a_hit = rng.random(activations.size) < self.p_mut
        n_a = int(a_hit.sum())
        if n_a:
            activations[a_hit] = rng.integers(0, N_ACTIVATIONS, size=n_a)
        return CppnGenome(weights, activations)

    def validate(self, genome: CppnGenome) -> None:
        if genome.weights.shape != (self.n_weights,):
            raise ValueError(f"weight vector shape {genome.weights.shape} != ({self.n_weights},)")
        if genome.activations.shape != (self.n_hidden,):
            raise ValueError(f"activation vector shape {genome.activations.shape} != ({self.n_hidden},)")
        if not np.isfinite(genome.weights).all():
            raise ValueError("weights must be finite")
        if (genome.activations < 0).any() or (genome.activations >= N_ACTIVATIONS).any():
            raise ValueError("activation selector out of range")
